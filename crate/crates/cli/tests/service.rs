use std::time::Duration;

use eventforge_core::synth;
use eventforge_cli::protocol::*;
use eventforge_cli::service::{start, ServiceConfig, ServiceHandle, TICK_HISTORY};
use eventforge_cli::session::SourceSpec;
use futures_util::{SinkExt, StreamExt};
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio_tungstenite::tungstenite::Message;

type Ws = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>>;

const WAIT: Duration = Duration::from_secs(20);

async fn service(rate: f64) -> ServiceHandle {
    service_with(rate, synth::moving_squares(32, 24, 90, 3)).await
}

async fn service_with(rate: f64, frames: Vec<eventforge_core::frame::Frame>) -> ServiceHandle {
    let config = ServiceConfig { source: SourceSpec::Video { frames, fps: 30.0 }, crf: 3, rate, ui_dir: "no-such-ui".into() };
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    start(config, listener).await.unwrap()
}

async fn connect(h: &ServiceHandle) -> Ws {
    tokio_tungstenite::connect_async(format!("ws://{}/ws", h.addr)).await.unwrap().0
}

async fn next_frame(ws: &mut Ws) -> (u8, Vec<u8>) {
    loop {
        let msg = tokio::time::timeout(WAIT, ws.next()).await.expect("message in time").unwrap().unwrap();
        if let Message::Binary(b) = msg {
            return (b[0], b[1..].to_vec());
        }
    }
}

async fn next_of(ws: &mut Ws, kind: u8) -> Vec<u8> {
    loop {
        let (k, body) = next_frame(ws).await;
        if k == kind {
            return body;
        }
    }
}

async fn next_tick(ws: &mut Ws) -> Tick {
    serde_json::from_slice(&next_of(ws, KIND_TICK).await).unwrap()
}

async fn send(ws: &mut Ws, json: &str) {
    ws.send(Message::Binary(frame(KIND_CONTROL, json.as_bytes()).into())).await.unwrap();
}

async fn http_get(h: &ServiceHandle, path: &str) -> (u16, String) {
    let mut s = tokio::net::TcpStream::connect(h.addr).await.unwrap();
    s.write_all(format!("GET {path} HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n").as_bytes()).await.unwrap();
    let mut buf = Vec::new();
    s.read_to_end(&mut buf).await.unwrap();
    let text = String::from_utf8_lossy(&buf).to_string();
    let status = text[9..12].parse().unwrap();
    let body = text.split_once("\r\n\r\n").map(|(_, b)| b.to_string()).unwrap_or_default();
    (status, body)
}

#[tokio::test(flavor = "multi_thread")]
async fn hello_ack_carries_session_state() {
    let h = service(200.0).await;
    let mut ws = connect(&h).await;
    let (kind, body) = next_frame(&mut ws).await;
    assert_eq!(kind, KIND_ACK);
    let ack: Ack = serde_json::from_slice(&body).unwrap();
    assert_eq!(ack.applied, "hello");
    assert_eq!((ack.state.width, ack.state.height, ack.state.crf), (32, 24, Some(3)));
}

#[tokio::test(flavor = "multi_thread")]
async fn clients_see_the_same_ticks() {
    let h = service(100.0).await;
    let mut a = connect(&h).await;
    let mut b = connect(&h).await;
    let first_a = next_tick(&mut a).await;
    // align b to the tick a saw first
    let mut tb = next_tick(&mut b).await;
    while tb.unit < first_a.unit {
        tb = next_tick(&mut b).await;
    }
    let mut ta = first_a;
    while ta.unit < tb.unit {
        ta = next_tick(&mut a).await;
    }
    for _ in 0..10 {
        assert_eq!(ta, tb);
        ta = next_tick(&mut a).await;
        tb = next_tick(&mut b).await;
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn crf_change_is_acknowledged_and_applied() {
    // sensor-like noise, where the contrast threshold decides the event rate
    let noisy = || synth::static_noise(32, 24, 90, 6, 2);
    let h = service_with(100.0, noisy()).await;
    let mut ws = connect(&h).await;
    for _ in 0..5 {
        next_tick(&mut ws).await;
    }
    send(&mut ws, r#"{"type":"set_crf","crf":9,"id":7}"#).await;
    let ack_unit;
    loop {
        let (k, body) = next_frame(&mut ws).await;
        if k == KIND_ACK {
            let ack: Ack = serde_json::from_slice(&body).unwrap();
            assert_eq!((ack.id, ack.applied.as_str(), ack.state.crf), (Some(7), "set_crf", Some(9)));
            ack_unit = ack.state.unit;
            break;
        }
    }
    let after = next_tick(&mut ws).await;
    assert!(after.unit > ack_unit, "acknowledged before the next unit");
    assert_eq!(after.crf, Some(9));
    let mut after_ticks = vec![after];
    while after_ticks.len() < 20 {
        after_ticks.push(next_tick(&mut ws).await);
    }
    assert!(after_ticks.iter().all(|t| t.crf == Some(9)));
    // the same units from an untouched session at the original level
    let reference = service_with(100.0, noisy()).await;
    let mut rws = connect(&reference).await;
    let last = after_ticks.last().unwrap().unit;
    let mut baseline = Vec::new();
    loop {
        let t = next_tick(&mut rws).await;
        if t.unit > last {
            break;
        }
        if t.unit >= after_ticks[0].unit {
            baseline.push(t);
        }
    }
    assert_eq!(baseline.len(), after_ticks.len());
    let sum = |v: &[Tick]| v.iter().map(|t| t.unit_events).sum::<u64>();
    assert!(sum(&after_ticks) < sum(&baseline), "{} vs {}", sum(&after_ticks), sum(&baseline));
}

#[tokio::test(flavor = "multi_thread")]
async fn view_toggle_reaches_ticks() {
    let h = service(100.0).await;
    let mut ws = connect(&h).await;
    send(&mut ws, r#"{"type":"toggle_view","view":"dt"}"#).await;
    let ack: Ack = serde_json::from_slice(&next_of(&mut ws, KIND_ACK).await).unwrap();
    if ack.applied == "hello" {
        let ack: Ack = serde_json::from_slice(&next_of(&mut ws, KIND_ACK).await).unwrap();
        assert_eq!(ack.state.view, View::Dt);
    }
    let t = next_tick(&mut ws).await;
    assert_eq!(t.view, View::Dt);
    let png = next_of(&mut ws, KIND_PREVIEW).await;
    assert!(png.starts_with(b"\x89PNG"));
}

#[tokio::test(flavor = "multi_thread")]
async fn malformed_message_gets_an_error_and_the_session_continues() {
    let h = service(100.0).await;
    let mut ws = connect(&h).await;
    ws.send(Message::Binary(frame(KIND_CONTROL, b"{not json").into())).await.unwrap();
    let err: ErrorReply = serde_json::from_slice(&next_of(&mut ws, KIND_ERROR).await).unwrap();
    assert!(err.error.contains("malformed"));
    send(&mut ws, r#"{"type":"set_crf","crf":42,"id":3}"#).await;
    let err: ErrorReply = serde_json::from_slice(&next_of(&mut ws, KIND_ERROR).await).unwrap();
    assert_eq!(err.id, Some(3));
    let a = next_tick(&mut ws).await;
    let b = next_tick(&mut ws).await;
    assert!(b.unit > a.unit);
    // bare JSON text is accepted too
    ws.send(Message::Text(r#"{"type":"pause","paused":true}"#.into())).await.unwrap();
    loop {
        let ack: Ack = serde_json::from_slice(&next_of(&mut ws, KIND_ACK).await).unwrap();
        if ack.applied == "pause" {
            assert!(ack.state.paused);
            break;
        }
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn http_endpoints_report_history_and_state() {
    let h = service(2000.0).await;
    tokio::time::sleep(Duration::from_millis(800)).await;
    let (status, body) = http_get(&h, "/ticks").await;
    assert_eq!(status, 200);
    let ticks: Vec<Tick> = serde_json::from_str(&body).unwrap();
    assert!(!ticks.is_empty() && ticks.len() <= TICK_HISTORY);
    let (status, body) = http_get(&h, "/state").await;
    assert_eq!(status, 200);
    let state: SessionState = serde_json::from_str(&body).unwrap();
    assert_eq!(state.width, 32);
    let (status, body) = http_get(&h, "/").await;
    assert_eq!(status, 404);
    assert!(body.contains("/ws"));
}
