//! Run the planning service in-process and call it over plain HTTP.
//!
//! cargo run --example http_service

use samplan::examples_data::customer_quote;
use samplan::service::{router, AppState, Repository, ServiceLimits};
use std::io::{Read, Write};
use std::net::TcpStream;
use std::sync::Arc;

fn request(addr: &str, method: &str, path: &str, body: &str) -> std::io::Result<String> {
    let mut s = TcpStream::connect(addr)?;
    write!(
        s,
        "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )?;
    let mut out = String::new();
    s.read_to_string(&mut out)?;
    Ok(out)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rt = tokio::runtime::Runtime::new()?;
    let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))?;
    let addr = listener.local_addr()?.to_string();
    let state = AppState { repo: Repository::new(vec![customer_quote()])?, limits: ServiceLimits::default() };
    rt.spawn(async move { axum::serve(listener, router(Arc::new(state))).await });

    let objects = request(&addr, "GET", "/objects", "")?;
    println!("{}\n", objects.lines().last().unwrap_or_default());
    let plan = r#"{"object": "CQ", "goal": [{"var": "followUp", "val": "documentCreated"}, {"var": "archiving", "val": "archived"}]}"#;
    let reply = request(&addr, "POST", "/plan", plan)?;
    let body = reply.split("\r\n\r\n").nth(1).unwrap_or_default();
    let v: serde_json::Value = serde_json::from_str(body)?;
    println!("verdict {} via {}, {} evaluations", v["verdict"], v["semantics"], v["stats"]["evaluations"]);
    let bad = r#"{"object": "CQ", "goal": [{"var": "nope", "val": "x"}]}"#;
    println!("{}", request(&addr, "POST", "/plan", bad)?.lines().next().unwrap_or_default());
    Ok(())
}
