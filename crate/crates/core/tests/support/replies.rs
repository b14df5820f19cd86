//! Adversarial classifier replies and an independent reading of the
//! first-token rule, shared by the theme tests and the acceptance suite.

use nomiclaw_core::themes::ThemeCode;
use proptest::prelude::*;

pub fn first_token_oracle(reply: &str) -> ThemeCode {
    let Some(tok) = reply.split(char::is_whitespace).find(|t| !t.is_empty()) else {
        return ThemeCode::Unknown;
    };
    let cleaned: String = tok.chars().filter(|c| c.is_alphanumeric()).collect();
    cleaned.parse::<ThemeCode>().ok().filter(|c| c.is_known()).unwrap_or(ThemeCode::Unknown)
}

pub fn adversarial_reply() -> impl Strategy<Value = String> {
    let code = prop::sample::select(vec![
        "HARM", "harm", "Soli", "JUST.", "**LEG**", "\"ACC\"", "TRAN:", "(CONS)", "RGHT,", "UTIL!", "resp", "UNKNOWN",
        "HARMS", "JUSTICE", "LEGAL", "H-A-R-M", "\u{2014}", "", "theme:", "1.", "ÜTIL", "SOLİ",
    ]);
    let tail = prop::sample::select(vec![
        "",
        " \u{2014} clearly risk",
        " JUST",
        "\nHARM",
        " because of fairness",
        " (LEG)",
        "\t\tSOLI",
    ]);
    let lead = prop::sample::select(vec!["", " ", "\n", "The theme is ", "Answer: ", "\u{a0}"]);
    (lead, code, tail).prop_map(|(l, c, t)| format!("{l}{c}{t}"))
}
