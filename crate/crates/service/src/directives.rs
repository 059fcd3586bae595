//! Trainee-facing directive texts. Clients render these verbatim.

use serde::Serialize;

use satf_core::control::{Directive, FeedbackCase};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DirectiveText {
    pub case_id: u8,
    pub id: &'static str,
    pub text: &'static str,
}

pub fn text(directive: Directive) -> &'static str {
    match directive {
        Directive::SlowDownFocusPrecision => {
            "Slow down and concentrate on placing the object precisely."
        }
        Directive::KeepGoing => "Keep practising: speed and precision will both improve.",
        Directive::GoFaster => "Precise work. Now try to be a little quicker.",
        Directive::BeatExpert => "Faster and more precise than the expert benchmark.",
    }
}

pub fn table() -> Vec<DirectiveText> {
    (1..=4)
        .filter_map(FeedbackCase::from_case_id)
        .map(|c| DirectiveText {
            case_id: c.case_id(),
            id: c.directive().id(),
            text: text(c.directive()),
        })
        .collect()
}
