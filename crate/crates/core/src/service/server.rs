//! The streaming server.
//!
//! One thread owns the [`Session`] and runs the loop: drain the command
//! inbox, step, and broadcast a [`Frame`] whenever the frame interval has
//! elapsed. Each connection gets its own thread; it forwards inbound text to
//! the inbox and drains a bounded outbox. A connection whose first bytes are
//! `GET ` is upgraded to WebSocket, anything else speaks newline-delimited
//! JSON over plain TCP.

use std::collections::VecDeque;
use std::io::{self, BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::{Arc, Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde_json::{json, Value};
use tungstenite::{Message, WebSocket};

use crate::dump::DumpWriter;
use crate::error::Result;
use crate::session::Session;

use super::protocol::{handle_command, hello, parse_command, Command, Control, Frame};

/// Frames an outbox holds before the oldest unsent one is dropped.
pub const DEFAULT_OUTBOX_FRAMES: usize = 8;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub fps: f64,
    /// Pace physics to wall-clock time; when false, step as fast as possible.
    pub realtime: bool,
    /// Stop after this many physics steps.
    pub max_steps: Option<u64>,
    pub dump: Option<PathBuf>,
    pub outbox_frames: usize,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig { fps: 30.0, realtime: true, max_steps: None, dump: None, outbox_frames: DEFAULT_OUTBOX_FRAMES }
    }
}

#[derive(Default)]
struct Queue {
    items: VecDeque<(bool, Arc<str>)>,
    frames: usize,
    closed: bool,
}

/// Returned by [`Outbox::pop`] once the outbox is closed and drained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Closed;

/// Per-client outbound queue. Replies are always kept; frames beyond the cap
/// evict the oldest queued frame so a slow client only ever falls behind by
/// a bounded amount.
pub struct Outbox {
    queue: Mutex<Queue>,
    ready: Condvar,
    frame_cap: usize,
}

impl Outbox {
    pub fn new(frame_cap: usize) -> Self {
        Outbox { queue: Mutex::new(Queue::default()), ready: Condvar::new(), frame_cap: frame_cap.max(1) }
    }

    fn push(&self, frame: bool, text: Arc<str>) {
        let mut q = self.queue.lock().unwrap();
        if q.closed {
            return;
        }
        if frame {
            if q.frames >= self.frame_cap {
                if let Some(i) = q.items.iter().position(|(f, _)| *f) {
                    q.items.remove(i);
                    q.frames -= 1;
                }
            }
            q.frames += 1;
        }
        q.items.push_back((frame, text));
        self.ready.notify_one();
    }

    pub fn push_frame(&self, text: Arc<str>) {
        self.push(true, text);
    }

    pub fn push_reply(&self, text: impl Into<Arc<str>>) {
        self.push(false, text.into());
    }

    /// Next message, waiting up to `wait`. `Err` once closed and drained.
    pub fn pop(&self, wait: Duration) -> Result<Option<Arc<str>>, Closed> {
        let mut q = self.queue.lock().unwrap();
        if q.items.is_empty() && !q.closed {
            q = self.ready.wait_timeout(q, wait).unwrap().0;
        }
        match q.items.pop_front() {
            Some((frame, text)) => {
                if frame {
                    q.frames -= 1;
                }
                Ok(Some(text))
            }
            None if q.closed => Err(Closed),
            None => Ok(None),
        }
    }

    pub fn close(&self) {
        self.queue.lock().unwrap().closed = true;
        self.ready.notify_all();
    }

    pub fn len(&self) -> usize {
        self.queue.lock().unwrap().items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

struct Client {
    id: u64,
    outbox: Arc<Outbox>,
}

struct Inbound {
    client: u64,
    text: String,
}

/// Stops a running server from another thread.
#[derive(Clone, Default)]
pub struct ShutdownHandle(Arc<AtomicBool>);

impl ShutdownHandle {
    pub fn shutdown(&self) {
        self.0.store(true, Ordering::SeqCst);
    }

    pub fn is_shutdown(&self) -> bool {
        self.0.load(Ordering::SeqCst)
    }
}

pub struct Server {
    listener: TcpListener,
    session: Session,
    config: ServerConfig,
    shutdown: ShutdownHandle,
}

impl Server {
    pub fn bind(addr: impl ToSocketAddrs, session: Session, config: ServerConfig) -> io::Result<Server> {
        let listener = TcpListener::bind(addr)?;
        listener.set_nonblocking(true)?;
        Ok(Server { listener, session, config, shutdown: ShutdownHandle::default() })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    pub fn shutdown_handle(&self) -> ShutdownHandle {
        self.shutdown.clone()
    }

    /// Runs until shut down or `max_steps` is reached; returns the final session.
    pub fn run(self) -> Result<Session> {
        let Server { listener, mut session, config, shutdown } = self;
        let clients: Arc<Mutex<Vec<Client>>> = Arc::default();
        let (inbox_tx, inbox_rx) = mpsc::channel::<Inbound>();

        let acceptor = {
            let clients = clients.clone();
            let shutdown = shutdown.clone();
            let frame_cap = config.outbox_frames;
            thread::spawn(move || accept_loop(listener, clients, inbox_tx, shutdown, frame_cap))
        };

        let result = sim_loop(&mut session, &config, &clients, &inbox_rx, &shutdown);
        shutdown.shutdown();
        for c in clients.lock().unwrap().iter() {
            c.outbox.close();
        }
        let _ = acceptor.join();
        result.map(|_| session)
    }
}

fn sim_loop(
    session: &mut Session,
    config: &ServerConfig,
    clients: &Mutex<Vec<Client>>,
    inbox: &Receiver<Inbound>,
    shutdown: &ShutdownHandle,
) -> Result<()> {
    let mut control = Control::default();
    let frame_interval = Duration::from_secs_f64(1.0 / config.fps.max(1e-3));
    let mut last_frame: Option<Instant> = None;
    let mut dump = match &config.dump {
        Some(path) => Some(DumpWriter::create(path)?),
        None => None,
    };
    if let Some(w) = dump.as_mut() {
        w.dump_frame(session)?;
    }
    let mut steps_done = 0u64;
    let mut next_due = Instant::now();
    let max_lag = Duration::from_millis(250);

    while !shutdown.is_shutdown() {
        while let Ok(msg) = inbox.try_recv() {
            let reply = match parse_command(&msg.text) {
                Ok(cmd) => {
                    let was_paused = control.paused;
                    let reply = handle_command(session, &mut control, cmd.clone());
                    if matches!(cmd, Command::Resume {}) && was_paused {
                        next_due = Instant::now();
                    }
                    reply
                }
                Err(reply) => reply,
            };
            send_to(clients, msg.client, &reply);
        }

        let limit_reached = config.max_steps.is_some_and(|m| steps_done >= m);
        let wants_step = !control.paused || control.pending_steps > 0;
        let now = Instant::now();
        let due = !config.realtime || control.paused || now >= next_due;
        let mut stepped = false;
        if wants_step && due && !limit_reached {
            match session.step() {
                Ok(()) => {
                    stepped = true;
                    steps_done += 1;
                    if control.paused {
                        control.pending_steps -= 1;
                    }
                    if let Some(w) = dump.as_mut() {
                        w.dump_frame(session)?;
                        if steps_done.is_multiple_of(256) {
                            w.flush()?;
                        }
                    }
                    next_due += Duration::from_secs_f64(session.params.dt);
                    if now > next_due + max_lag {
                        next_due = now;
                    }
                }
                Err(e) => {
                    log::warn!("step failed, pausing: {e}");
                    control.paused = true;
                    control.pending_steps = 0;
                    broadcast(clients, &json!({"type": "error", "error": e.code(), "message": e.to_string()}), false);
                }
            }
        }

        let now = Instant::now();
        if last_frame.is_none_or(|t| now - t >= frame_interval) && !clients.lock().unwrap().is_empty() {
            let frame: Arc<str> = Frame::of(session, &control).to_json().into();
            for c in clients.lock().unwrap().iter() {
                c.outbox.push_frame(frame.clone());
            }
            last_frame = Some(now);
        }

        if config.max_steps.is_some_and(|m| steps_done >= m) {
            break;
        }
        if !stepped {
            let until =
                if config.realtime && wants_step { next_due.saturating_duration_since(now) } else { Duration::MAX };
            thread::sleep(until.min(Duration::from_millis(1)));
        }
    }
    if let Some(w) = dump.as_mut() {
        w.flush()?;
    }
    Ok(())
}

fn send_to(clients: &Mutex<Vec<Client>>, id: u64, message: &Value) {
    if let Some(c) = clients.lock().unwrap().iter().find(|c| c.id == id) {
        c.outbox.push_reply(message.to_string());
    }
}

fn broadcast(clients: &Mutex<Vec<Client>>, message: &Value, frame: bool) {
    let text: Arc<str> = message.to_string().into();
    for c in clients.lock().unwrap().iter() {
        c.outbox.push(frame, text.clone());
    }
}

fn accept_loop(
    listener: TcpListener,
    clients: Arc<Mutex<Vec<Client>>>,
    inbox: Sender<Inbound>,
    shutdown: ShutdownHandle,
    frame_cap: usize,
) {
    let next_id = AtomicU64::new(0);
    let mut workers = Vec::new();
    while !shutdown.is_shutdown() {
        match listener.accept() {
            Ok((stream, peer)) => {
                let id = next_id.fetch_add(1, Ordering::Relaxed);
                log::info!("client {id} connected from {peer}");
                let outbox = Arc::new(Outbox::new(frame_cap));
                outbox.push_reply(hello().to_string());
                clients.lock().unwrap().push(Client { id, outbox: outbox.clone() });
                let (clients, inbox, shutdown) = (clients.clone(), inbox.clone(), shutdown.clone());
                workers.push(thread::spawn(move || {
                    if let Err(e) = serve_connection(stream, id, &inbox, &outbox, &shutdown) {
                        log::debug!("client {id}: {e}");
                    }
                    outbox.close();
                    clients.lock().unwrap().retain(|c| c.id != id);
                    log::info!("client {id} disconnected");
                }));
            }
            Err(e) if e.kind() == io::ErrorKind::WouldBlock => thread::sleep(Duration::from_millis(5)),
            Err(e) => {
                log::warn!("accept failed: {e}");
                thread::sleep(Duration::from_millis(5));
            }
        }
    }
    for w in workers {
        let _ = w.join();
    }
}

/// True when the client opened with an HTTP `GET`, i.e. a WebSocket upgrade.
fn looks_like_websocket(stream: &TcpStream) -> io::Result<bool> {
    stream.set_read_timeout(Some(Duration::from_millis(20)))?;
    let deadline = Instant::now() + Duration::from_millis(300);
    let mut buf = [0u8; 4];
    while Instant::now() < deadline {
        match stream.peek(&mut buf) {
            Ok(0) => return Err(io::ErrorKind::UnexpectedEof.into()),
            Ok(n) if n >= 4 => return Ok(&buf == b"GET "),
            Ok(n) if !b"GET ".starts_with(&buf[..n]) => return Ok(false),
            Ok(_) => {}
            Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(false)
}

fn serve_connection(
    stream: TcpStream,
    id: u64,
    inbox: &Sender<Inbound>,
    outbox: &Outbox,
    shutdown: &ShutdownHandle,
) -> io::Result<()> {
    stream.set_nonblocking(false)?;
    stream.set_nodelay(true)?;
    if looks_like_websocket(&stream)? {
        stream.set_read_timeout(Some(Duration::from_secs(5)))?;
        let ws = tungstenite::accept(stream).map_err(|e| io::Error::other(e.to_string()))?;
        serve_websocket(ws, id, inbox, outbox, shutdown)
    } else {
        serve_lines(stream, id, inbox, outbox, shutdown)
    }
}

fn serve_websocket(
    mut ws: WebSocket<TcpStream>,
    id: u64,
    inbox: &Sender<Inbound>,
    outbox: &Outbox,
    shutdown: &ShutdownHandle,
) -> io::Result<()> {
    ws.get_ref().set_read_timeout(Some(Duration::from_millis(2)))?;
    let to_io = |e: tungstenite::Error| io::Error::other(e.to_string());
    while !shutdown.is_shutdown() {
        loop {
            match outbox.pop(Duration::ZERO) {
                Ok(Some(text)) => ws.send(Message::text(&*text)).map_err(to_io)?,
                Ok(None) => break,
                Err(Closed) => return Ok(()),
            }
        }
        match ws.read() {
            Ok(Message::Text(text)) => {
                let _ = inbox.send(Inbound { client: id, text: text.as_str().to_string() });
            }
            Ok(Message::Close(_)) => return Ok(()),
            Ok(_) => {}
            Err(tungstenite::Error::Io(e))
                if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => {}
            Err(tungstenite::Error::ConnectionClosed | tungstenite::Error::AlreadyClosed) => return Ok(()),
            Err(e) => return Err(to_io(e)),
        }
    }
    let _ = ws.close(None);
    let _ = ws.flush();
    Ok(())
}

fn serve_lines(
    stream: TcpStream,
    id: u64,
    inbox: &Sender<Inbound>,
    outbox: &Outbox,
    shutdown: &ShutdownHandle,
) -> io::Result<()> {
    stream.set_read_timeout(None)?;
    let reader = {
        let stream = stream.try_clone()?;
        let inbox = inbox.clone();
        thread::spawn(move || {
            for line in BufReader::new(stream).lines() {
                let Ok(line) = line else { break };
                if line.trim().is_empty() {
                    continue;
                }
                if inbox.send(Inbound { client: id, text: line }).is_err() {
                    break;
                }
            }
        })
    };
    let mut writer = io::BufWriter::new(&stream);
    let result = loop {
        if shutdown.is_shutdown() || reader.is_finished() {
            break Ok(());
        }
        match outbox.pop(Duration::from_millis(20)) {
            Ok(Some(text)) => {
                let sent = writer.write_all(text.as_bytes()).and_then(|_| writer.write_all(b"\n"));
                if let Err(e) = sent.and_then(|_| if outbox.is_empty() { writer.flush() } else { Ok(()) }) {
                    break Err(e);
                }
            }
            Ok(None) => {}
            Err(Closed) => break Ok(()),
        }
    };
    drop(writer);
    let _ = stream.shutdown(std::net::Shutdown::Both);
    let _ = reader.join();
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outbox_drops_oldest_frames_but_keeps_replies() {
        let outbox = Outbox::new(3);
        outbox.push_reply("r0");
        for i in 0..10 {
            outbox.push_frame(format!("f{i}").into());
        }
        outbox.push_reply("r1");
        let mut seen = Vec::new();
        while let Ok(Some(t)) = outbox.pop(Duration::ZERO) {
            seen.push(t.to_string());
        }
        assert_eq!(seen, ["r0", "f7", "f8", "f9", "r1"]);
        outbox.close();
        assert!(outbox.pop(Duration::ZERO).is_err());
    }
}
