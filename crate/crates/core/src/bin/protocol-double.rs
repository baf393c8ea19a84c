//! Scripted line-protocol classifier used to exercise the external adapter.
//!
//! Usage: `protocol-double <mode> [arg]` where mode is one of
//! `constant <label>`, `keyword <word>`, `parse` (label = text as integer),
//! `wrong-id`, `garbage`, `short`, `exit`, `sleep <ms>`.

use std::io::{self, BufRead, Write};

use serde_json::{json, Value};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mode = args.first().map(String::as_str).unwrap_or("constant");
    let arg = args.get(1).cloned().unwrap_or_default();

    let stdin = io::stdin();
    let mut out = io::stdout().lock();
    for line in stdin.lock().lines() {
        let Ok(line) = line else { break };
        let req: Value = match serde_json::from_str(&line) {
            Ok(v) => v,
            Err(_) => break,
        };
        let id = req["id"].as_u64().unwrap_or(0);
        let texts: Vec<&str> = req["texts"]
            .as_array()
            .map(|a| a.iter().filter_map(Value::as_str).collect())
            .unwrap_or_default();
        let labels: Vec<u64> = match mode {
            "constant" => vec![arg.parse().unwrap_or(0); texts.len()],
            "keyword" => texts
                .iter()
                .map(|t| u64::from(t.split_whitespace().any(|w| w == arg)))
                .collect(),
            "parse" => texts.iter().map(|t| t.trim().parse().unwrap_or(0)).collect(),
            "short" => vec![0; texts.len().saturating_sub(1)],
            "exit" => return,
            "sleep" => {
                std::thread::sleep(std::time::Duration::from_millis(arg.parse().unwrap_or(1000)));
                vec![0; texts.len()]
            }
            _ => vec![0; texts.len()],
        };
        let resp = match mode {
            "wrong-id" => json!({"id": id + 1, "labels": labels}),
            "garbage" => json!({"identifier": id}),
            _ => json!({"id": id, "labels": labels}),
        };
        if writeln!(out, "{resp}").and_then(|_| out.flush()).is_err() {
            break;
        }
    }
}
