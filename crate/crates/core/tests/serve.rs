use std::net::TcpListener;
use std::thread;

use pmt_core::protocol::{decode, encode, Body, ProtocolMessage};
use pmt_core::server::{serve, ServeOptions};
use pmt_core::session::SharedBuf;
use pmt_core::{replay, ClientCommand, Content, SessionOptions, SessionPlan};
use tungstenite::Message;

fn send(ws: &mut tungstenite::WebSocket<tungstenite::stream::MaybeTlsStream<std::net::TcpStream>>, seq: u64, cmd: ClientCommand) {
    ws.send(Message::text(encode(&ProtocolMessage::client(seq, cmd)).unwrap())).unwrap();
}

#[test]
fn a_client_plays_a_day_over_the_socket() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let plan = SessionPlan::build(4, &Content::defaults().unwrap(), 7).unwrap();
    let buf = SharedBuf::default();
    let log = buf.clone();
    let server = thread::spawn(move || {
        let opts = ServeOptions { time_scale: 4000, ..ServeOptions::default() };
        serve(listener, plan, SessionOptions::default(), Box::new(buf), opts).unwrap()
    });

    let (mut ws, _) = tungstenite::connect(format!("ws://{addr}")).unwrap();
    send(&mut ws, 1, ClientCommand::Join { participant: None, resume_from: None });
    let mut kinds = Vec::new();
    let mut acked = false;
    loop {
        match ws.read() {
            Ok(Message::Text(t)) => {
                let msg = decode(t.as_str()).unwrap();
                let Body::Engine(ev) = &msg.body else { panic!("client frame echoed") };
                kinds.push(ev.kind());
                if ev.kind() == "task_briefing" && !acked {
                    acked = true;
                    send(&mut ws, 2, ClientCommand::AckBriefing {});
                    send(&mut ws, 3, ClientCommand::Move { to: "nowhere".into() });
                }
            }
            Ok(Message::Close(_)) | Err(_) => break,
            Ok(_) => {}
        }
    }
    let record = server.join().unwrap();
    assert!(kinds.contains(&"tutorial_step"));
    assert!(kinds.contains(&"command_rejected"));
    assert_eq!(kinds.last(), Some(&"session_end"));
    assert!(!record.aborted);
    assert_eq!(replay(&log.text()).unwrap(), record);
}

#[test]
fn reconnect_resumes_after_the_last_seen_seq() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let plan = SessionPlan::build(5, &Content::defaults().unwrap(), 3).unwrap();
    let server = thread::spawn(move || {
        let opts = ServeOptions { time_scale: 2000, ..ServeOptions::default() };
        serve(listener, plan, SessionOptions::default(), Box::new(std::io::sink()), opts).unwrap()
    });

    let read_seq = |ws: &mut tungstenite::WebSocket<_>| -> Option<u64> {
        match ws.read() {
            Ok(Message::Text(t)) => Some(decode(t.as_str()).unwrap().seq),
            _ => None,
        }
    };
    let (mut ws, _) = tungstenite::connect(format!("ws://{addr}")).unwrap();
    send(&mut ws, 1, ClientCommand::Join { participant: None, resume_from: None });
    let first: Vec<u64> = (0..3).filter_map(|_| read_seq(&mut ws)).collect();
    assert_eq!(first.len(), 3);
    send(&mut ws, 2, ClientCommand::AckBriefing {});
    drop(ws);

    let last = *first.last().unwrap();
    let (mut ws, _) = tungstenite::connect(format!("ws://{addr}")).unwrap();
    send(&mut ws, 1, ClientCommand::Join { participant: None, resume_from: Some(last) });
    let mut seqs = Vec::new();
    while let Some(seq) = read_seq(&mut ws) {
        seqs.push(seq);
    }
    let record = server.join().unwrap();
    assert!(seqs[0] > last);
    assert!(seqs.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(record.outcomes.len(), 7);
}
