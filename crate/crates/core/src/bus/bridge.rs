//! TCP bridge: bus envelopes as line-delimited JSON for the console.
//! Wire format in docs/wire.md.

use std::io::{BufRead, BufReader, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use serde::Deserialize;
use serde_json::{json, Value as Json};

use super::{Bus, Envelope, SESSION_EVENT, USER_QUERY, VIS_CATALOGUE};

/// Topics a console may publish to.
pub const INBOUND_TOPICS: [&str; 2] = [USER_QUERY, SESSION_EVENT];

const POLL: Duration = Duration::from_millis(20);

#[derive(Debug, thiserror::Error)]
pub enum BridgeError {
    #[error("address {0} is already in use")]
    AddrInUse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Deserialize)]
struct Inbound {
    topic: String,
    payload: Json,
}

type Streams = Arc<Mutex<Vec<TcpStream>>>;

/// A running bridge. Shuts down on drop.
#[derive(Debug)]
pub struct Bridge {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    streams: Streams,
    acceptor: Option<JoinHandle<()>>,
    catalogue: Arc<Mutex<Json>>,
}

impl Bridge {
    /// Bind and start accepting. Each client first receives a
    /// `vis/catalogue` envelope with `catalogue`, then every bus envelope.
    pub fn bind(bus: Bus, addr: impl ToSocketAddrs + std::fmt::Debug, catalogue: Json) -> Result<Self, BridgeError> {
        let shown = format!("{addr:?}");
        let listener = TcpListener::bind(addr).map_err(|e| match e.kind() {
            std::io::ErrorKind::AddrInUse => BridgeError::AddrInUse(shown),
            _ => BridgeError::Io(e),
        })?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let streams: Streams = Arc::default();
        let catalogue = Arc::new(Mutex::new(catalogue));
        let acceptor = {
            let (stop, streams, catalogue) = (stop.clone(), streams.clone(), catalogue.clone());
            std::thread::spawn(move || accept_loop(listener, bus, stop, streams, catalogue))
        };
        log::info!("console bridge listening on {addr}");
        Ok(Self {
            addr,
            stop,
            streams,
            acceptor: Some(acceptor),
            catalogue,
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Replace the catalogue sent to new clients.
    pub fn set_catalogue(&self, catalogue: Json) {
        *self.catalogue.lock().unwrap_or_else(|e| e.into_inner()) = catalogue;
    }

    pub fn shutdown(mut self) {
        self.stop_now();
    }

    fn stop_now(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        for s in self.streams.lock().unwrap_or_else(|e| e.into_inner()).drain(..) {
            let _ = s.shutdown(Shutdown::Both);
        }
        if let Some(h) = self.acceptor.take() {
            let _ = h.join();
        }
    }
}

impl Drop for Bridge {
    fn drop(&mut self) {
        self.stop_now();
    }
}

fn accept_loop(listener: TcpListener, bus: Bus, stop: Arc<AtomicBool>, streams: Streams, catalogue: Arc<Mutex<Json>>) {
    let mut workers = Vec::new();
    while !stop.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, peer)) => {
                log::info!("console connected from {peer}");
                if let Err(e) = start_client(stream, &bus, &stop, &streams, &catalogue, &mut workers) {
                    log::warn!("console {peer}: {e}");
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => std::thread::sleep(POLL),
            Err(e) => {
                log::warn!("accept failed: {e}");
                std::thread::sleep(POLL);
            }
        }
    }
    for w in workers {
        let _ = w.join();
    }
}

fn write_line(out: &Mutex<TcpStream>, value: &impl serde::Serialize) -> std::io::Result<()> {
    let mut line = serde_json::to_vec(value).map_err(std::io::Error::other)?;
    line.push(b'\n');
    let mut s = out.lock().unwrap_or_else(|e| e.into_inner());
    s.write_all(&line)?;
    s.flush()
}

fn start_client(
    stream: TcpStream,
    bus: &Bus,
    stop: &Arc<AtomicBool>,
    streams: &Streams,
    catalogue: &Arc<Mutex<Json>>,
    workers: &mut Vec<JoinHandle<()>>,
) -> std::io::Result<()> {
    stream.set_nonblocking(false)?;
    streams
        .lock()
        .unwrap_or_else(|e| e.into_inner())
        .push(stream.try_clone()?);
    let out = Arc::new(Mutex::new(stream.try_clone()?));
    // Subscribe before the handshake so nothing published in between is lost.
    let sub = bus.subscribe("+/+").map_err(std::io::Error::other)?;
    let hello = Envelope {
        topic: VIS_CATALOGUE.into(),
        seq: bus.last_seq(VIS_CATALOGUE),
        timestamp: (bus.clock)(),
        payload: catalogue.lock().unwrap_or_else(|e| e.into_inner()).clone(),
    };
    write_line(&out, &hello)?;

    let writer = {
        let (out, stop) = (out.clone(), stop.clone());
        std::thread::spawn(move || {
            while !stop.load(Ordering::SeqCst) {
                if let Some(env) = sub.recv_timeout(POLL) {
                    if write_line(&out, &env).is_err() {
                        break;
                    }
                }
            }
        })
    };
    let reader = {
        let bus = bus.clone();
        std::thread::spawn(move || {
            for line in BufReader::new(stream).lines() {
                let Ok(line) = line else { break };
                if line.trim().is_empty() {
                    continue;
                }
                let result = serde_json::from_str::<Inbound>(&line)
                    .map_err(|e| format!("bad message: {e}"))
                    .and_then(|m| {
                        if !INBOUND_TOPICS.contains(&m.topic.as_str()) {
                            return Err(format!("console may not publish to {}", m.topic));
                        }
                        bus.publish(&m.topic, m.payload).map_err(|e| e.to_string())
                    });
                if let Err(e) = result {
                    if write_line(&out, &json!({ "error": e })).is_err() {
                        break;
                    }
                }
            }
        })
    };
    workers.push(writer);
    workers.push(reader);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::BufRead;

    #[test]
    fn handshake_then_forwarding_then_inbound() {
        let bus = Bus::new();
        let bridge = Bridge::bind(bus.clone(), "127.0.0.1:0", json!({"charts": ["a"]})).unwrap();
        let stream = TcpStream::connect(bridge.local_addr()).unwrap();
        stream.set_read_timeout(Some(Duration::from_secs(5))).unwrap();
        let mut lines = BufReader::new(stream.try_clone().unwrap()).lines();
        let hello: Envelope = serde_json::from_str(&lines.next().unwrap().unwrap()).unwrap();
        assert_eq!(hello.topic, VIS_CATALOGUE);
        assert_eq!(hello.payload["charts"][0], "a");

        bus.publish(SESSION_EVENT, json!({"kind": "ping"})).unwrap();
        let env: Envelope = serde_json::from_str(&lines.next().unwrap().unwrap()).unwrap();
        assert_eq!(env.payload["kind"], "ping");

        let q = bus.subscribe(USER_QUERY).unwrap();
        let mut w = stream.try_clone().unwrap();
        writeln!(
            w,
            r#"{{"topic": "user/query", "payload": {{"transcript": "zoom in"}}}}"#
        )
        .unwrap();
        writeln!(w, r#"{{"topic": "agent/response", "payload": {{}}}}"#).unwrap();
        let got = q.recv_timeout(Duration::from_secs(5)).unwrap();
        assert_eq!(got.payload["transcript"], "zoom in");
        // The echo of the query, then the refusal.
        let mut saw_error = false;
        for _ in 0..3 {
            let v: Json = serde_json::from_str(&lines.next().unwrap().unwrap()).unwrap();
            if v.get("error").is_some() {
                saw_error = true;
                break;
            }
        }
        assert!(saw_error);
        bridge.shutdown();
    }

    #[test]
    fn busy_port_is_reported() {
        let first = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = first.local_addr().unwrap();
        let err = Bridge::bind(Bus::new(), addr, json!({"charts": []})).unwrap_err();
        assert!(matches!(err, BridgeError::AddrInUse(_)));
    }
}
