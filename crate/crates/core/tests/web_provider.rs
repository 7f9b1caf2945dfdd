use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use triggernet::ngd::{
    estimate_scale, HitCache, HitProvider, ProviderError, WebConfig, WebProvider,
};

/// Serves scripted `(status, body)` responses in order, repeating the last one,
/// and records the decoded `q` parameter of every request.
struct MockServer {
    url: String,
    queries: Arc<Mutex<Vec<String>>>,
    raw: Arc<Mutex<Vec<String>>>,
}

fn decode(s: &str) -> String {
    let bytes = s.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'+' => out.push(b' '),
            b'%' if i + 2 < bytes.len() => {
                out.push(u8::from_str_radix(&s[i + 1..i + 3], 16).unwrap());
                i += 2;
            }
            b => out.push(b),
        }
        i += 1;
    }
    String::from_utf8(out).unwrap()
}

impl MockServer {
    fn start(script: Vec<(u16, String)>) -> MockServer {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/search", listener.local_addr().unwrap());
        let queries = Arc::new(Mutex::new(Vec::new()));
        let raw = Arc::new(Mutex::new(Vec::new()));
        let (q, r) = (queries.clone(), raw.clone());
        thread::spawn(move || {
            for (n, stream) in listener.incoming().enumerate() {
                let Ok(mut stream) = stream else { break };
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut request_line = String::new();
                reader.read_line(&mut request_line).unwrap();
                loop {
                    let mut header = String::new();
                    if reader.read_line(&mut header).unwrap() == 0 || header == "\r\n" {
                        break;
                    }
                }
                let target = request_line
                    .split_whitespace()
                    .nth(1)
                    .unwrap_or("")
                    .to_owned();
                let query = target.split_once('?').map(|(_, q)| q).unwrap_or("");
                for param in query.split('&') {
                    if let Some(v) = param.strip_prefix("q=") {
                        q.lock().unwrap().push(decode(v));
                    }
                }
                r.lock().unwrap().push(target);
                let (status, body) = script[n.min(script.len() - 1)].clone();
                let response = format!(
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                );
                let _ = stream.write_all(response.as_bytes());
            }
        });
        MockServer { url, queries, raw }
    }

    fn queries(&self) -> Vec<String> {
        self.queries.lock().unwrap().clone()
    }
}

fn provider(url: &str) -> WebProvider {
    let mut cfg = WebConfig::new(url);
    cfg.requests_per_second = 1000.0;
    cfg.initial_backoff = Duration::from_millis(5);
    cfg.max_attempts = 3;
    WebProvider::new(cfg).unwrap()
}

fn total(n: &str) -> String {
    format!(r#"{{"searchInformation":{{"totalResults":"{n}"}}}}"#)
}

#[test]
fn passes_reported_total_through() {
    let server = MockServer::start(vec![(200, total("12345"))]);
    assert_eq!(provider(&server.url).hits("Bible").unwrap(), 12345);
    assert_eq!(server.queries(), ["Bible"]);
}

#[test]
fn retries_rate_limited_request() {
    let server = MockServer::start(vec![(429, "{}".into()), (200, total("7"))]);
    assert_eq!(provider(&server.url).hits("Islam").unwrap(), 7);
    assert_eq!(server.queries().len(), 2);
}

#[test]
fn gives_up_after_max_attempts() {
    let server = MockServer::start(vec![(503, "{}".into())]);
    match provider(&server.url).hits("Islam") {
        Err(ProviderError::Http {
            status: 503,
            attempts: 3,
        }) => {}
        other => panic!("{other:?}"),
    }
    assert_eq!(server.queries().len(), 3);
}

#[test]
fn client_errors_are_not_retried() {
    let server = MockServer::start(vec![(403, "{}".into())]);
    assert!(matches!(
        provider(&server.url).hits("Islam"),
        Err(ProviderError::Http {
            status: 403,
            attempts: 1
        })
    ));
}

#[test]
fn unparsable_body_is_protocol_error() {
    let server = MockServer::start(vec![(200, "<html>".into())]);
    assert!(matches!(
        provider(&server.url).hits("x"),
        Err(ProviderError::Protocol(_))
    ));
}

#[test]
fn pair_query_is_symmetric_and_quoted() {
    let server = MockServer::start(vec![(200, total("3"))]);
    let p = provider(&server.url);
    assert_eq!(p.pair_hits("New York", "Islam").unwrap(), 3);
    assert_eq!(p.pair_hits("Islam", "New York").unwrap(), 3);
    let q = server.queries();
    assert_eq!(q[0], q[1]);
    assert_eq!(q[0], "\"New York\" Islam");
}

#[test]
fn api_key_is_sent_from_environment() {
    std::env::set_var("TRIGGERNET_TEST_KEY", "s3cret");
    let server = MockServer::start(vec![(200, total("1"))]);
    let mut cfg = WebConfig::new(&server.url);
    cfg.api_key_env = Some("TRIGGERNET_TEST_KEY".into());
    WebProvider::new(cfg).unwrap().hits("x").unwrap();
    assert!(server.raw.lock().unwrap()[0].contains("key=s3cret"));
}

#[test]
fn rate_limit_spaces_requests() {
    let server = MockServer::start(vec![(200, total("1"))]);
    let mut cfg = WebConfig::new(&server.url);
    cfg.requests_per_second = 20.0;
    let p = WebProvider::new(cfg).unwrap();
    let start = Instant::now();
    for _ in 0..5 {
        p.hits("x").unwrap();
    }
    // five requests need four full intervals of 50 ms
    assert!(
        start.elapsed() >= Duration::from_millis(195),
        "{:?}",
        start.elapsed()
    );
}

#[test]
fn scale_from_probe_term_times_words_per_page() {
    let server = MockServer::start(vec![(200, r#"{"total": "25,270,000,000"}"#.into())]);
    let p = provider(&server.url);
    let cache = HitCache::in_memory();
    assert_eq!(estimate_scale(&p, &cache).unwrap(), 2.527e13);
    // the probe is cached
    assert_eq!(estimate_scale(&p, &cache).unwrap(), 2.527e13);
    assert_eq!(server.queries(), ["the"]);
}
