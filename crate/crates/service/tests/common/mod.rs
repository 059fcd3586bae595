#![allow(dead_code)]

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use futures::{SinkExt, StreamExt};
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{connect_async, MaybeTlsStream, WebSocketStream};

use satf_core::benchmark::load_profile;
use satf_core::control::ControlConfig;
use satf_core::geometry::BoardGeometry;
use satf_service::server::{spawn, ServerConfig};
use satf_service::wire::{decode_server, encode_client, ClientMessage, ServerMessage};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn satf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_satf"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("run satf")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub async fn start_server(expert: &Path, log_dir: &Path) -> SocketAddr {
    let cfg = ServerConfig {
        expert: load_profile(&std::fs::read(expert).unwrap()).unwrap(),
        geometry: BoardGeometry::default(),
        control: ControlConfig::default(),
        log_dir: log_dir.to_path_buf(),
    };
    spawn("127.0.0.1:0".parse().unwrap(), cfg).await.unwrap().0
}

pub async fn create_session(addr: SocketAddr, body: serde_json::Value) -> String {
    let resp = reqwest::Client::new()
        .post(format!("http://{addr}/sessions"))
        .json(&body)
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), 201);
    let v: serde_json::Value = resp.json().await.unwrap();
    v["session_id"].as_str().unwrap().to_string()
}

pub type Ws = WebSocketStream<MaybeTlsStream<TcpStream>>;

pub async fn connect(addr: SocketAddr, session_id: &str) -> Ws {
    connect_async(format!("ws://{addr}/sessions/{session_id}/live"))
        .await
        .unwrap()
        .0
}

pub async fn send(ws: &mut Ws, msg: &ClientMessage) {
    send_raw(ws, &encode_client(msg)).await;
}

pub async fn send_raw(ws: &mut Ws, text: &str) {
    ws.send(Message::text(text)).await.unwrap();
}

pub async fn recv(ws: &mut Ws) -> ServerMessage {
    loop {
        match ws.next().await.expect("stream open").unwrap() {
            Message::Text(t) => return decode_server(t.as_str()).unwrap(),
            Message::Ping(_) | Message::Pong(_) => continue,
            other => panic!("unexpected frame {other:?}"),
        }
    }
}

/// Replies received until (and including) the first one matching `stop`.
pub async fn recv_until(ws: &mut Ws, stop: impl Fn(&ServerMessage) -> bool) -> Vec<ServerMessage> {
    let mut out = Vec::new();
    loop {
        let m = recv(ws).await;
        let done = stop(&m);
        out.push(m);
        if done {
            return out;
        }
    }
}
