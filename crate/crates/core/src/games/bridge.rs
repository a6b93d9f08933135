use std::io::{BufRead, BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::process::{Child, Command, Stdio};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::Serialize;
use serde_json::{json, Value};

use crate::coalition::{Coalition, MAX_PLAYERS};
use crate::error::{Error, Result};
use crate::game::Game;

#[derive(Serialize)]
#[serde(tag = "op", rename_all = "lowercase")]
enum Request<'a> {
    Hello,
    Eval { id: u64, players: &'a [usize] },
    Bye,
}

fn protocol(msg: impl Into<String>) -> Error {
    Error::BridgeProtocol(msg.into())
}

struct Connection {
    reader: Box<dyn BufRead + Send>,
    writer: Box<dyn Write + Send>,
    child: Option<Child>,
    next_id: u64,
    line: String,
}

impl Connection {
    fn send(&mut self, request: &Request) -> Result<()> {
        let mut bytes = serde_json::to_vec(request).map_err(|e| protocol(e.to_string()))?;
        bytes.push(b'\n');
        self.writer.write_all(&bytes)?;
        self.writer.flush()?;
        Ok(())
    }

    fn receive(&mut self) -> Result<Value> {
        self.line.clear();
        if self.reader.read_line(&mut self.line)? == 0 {
            return Err(protocol("server closed the connection"));
        }
        let reply: Value = serde_json::from_str(self.line.trim_end())
            .map_err(|e| protocol(format!("malformed reply `{}`: {e}", self.line.trim_end())))?;
        if reply.get("op").and_then(Value::as_str) == Some("error") {
            let msg = reply.get("message").and_then(Value::as_str).unwrap_or("unspecified");
            return Err(protocol(format!("server error: {msg}")));
        }
        Ok(reply)
    }

    fn handshake(&mut self) -> Result<usize> {
        self.send(&Request::Hello)?;
        let reply = self.receive()?;
        if reply.get("op").and_then(Value::as_str) != Some("hello") {
            return Err(protocol(format!("expected hello, got {reply}")));
        }
        let n = reply
            .get("n")
            .and_then(Value::as_u64)
            .ok_or_else(|| protocol(format!("hello reply without integer n: {reply}")))?;
        if n == 0 || n > MAX_PLAYERS as u64 {
            return Err(protocol(format!("player count {n} outside 1..={MAX_PLAYERS}")));
        }
        Ok(n as usize)
    }

    fn eval(&mut self, players: &[usize]) -> Result<f64> {
        let id = self.next_id;
        self.next_id += 1;
        self.send(&Request::Eval { id, players })?;
        let reply = self.receive()?;
        if reply.get("op").and_then(Value::as_str) != Some("eval") {
            return Err(protocol(format!("expected eval reply, got {reply}")));
        }
        match reply.get("id").and_then(Value::as_u64) {
            Some(got) if got == id => {}
            other => return Err(protocol(format!("reply id {other:?} does not match request {id}"))),
        }
        reply
            .get("value")
            .and_then(Value::as_f64)
            .filter(|v| v.is_finite())
            .ok_or_else(|| protocol(format!("reply without finite value: {reply}")))
    }
}

impl Drop for Connection {
    fn drop(&mut self) {
        let _ = self.send(&Request::Bye);
        let Some(mut child) = self.child.take() else { return };
        // closing stdin lets servers that only watch for EOF exit too
        self.writer = Box::new(std::io::sink());
        let deadline = Instant::now() + Duration::from_secs(2);
        while Instant::now() < deadline {
            match child.try_wait() {
                Ok(Some(_)) | Err(_) => return,
                Ok(None) => thread::sleep(Duration::from_millis(10)),
            }
        }
        let _ = child.kill();
        let _ = child.wait();
    }
}

/// A game whose value function lives in another process, reached through
/// newline-delimited JSON over a child's stdio or a TCP socket.
///
/// Requests are serialized through one connection; open one `BridgeGame` per
/// worker for parallel use.
pub struct BridgeGame {
    n: usize,
    conn: Mutex<Connection>,
}

impl std::fmt::Debug for BridgeGame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BridgeGame").field("n", &self.n).finish_non_exhaustive()
    }
}

impl BridgeGame {
    /// Runs `command` through `sh -c` and talks to it over stdin/stdout.
    pub fn spawn(command: &str) -> Result<Self> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        Self::handshake(Connection {
            reader: Box::new(BufReader::new(stdout)),
            writer: Box::new(stdin),
            child: Some(child),
            next_id: 0,
            line: String::new(),
        })
    }

    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        let reader = BufReader::new(stream.try_clone()?);
        Self::from_streams(reader, stream)
    }

    /// Uses an already open pair of streams.
    pub fn from_streams<R, W>(reader: R, writer: W) -> Result<Self>
    where
        R: BufRead + Send + 'static,
        W: Write + Send + 'static,
    {
        Self::handshake(Connection {
            reader: Box::new(reader),
            writer: Box::new(writer),
            child: None,
            next_id: 0,
            line: String::new(),
        })
    }

    fn handshake(mut conn: Connection) -> Result<Self> {
        let n = conn.handshake()?;
        Ok(Self {
            n,
            conn: Mutex::new(conn),
        })
    }
}

impl Game for BridgeGame {
    fn n(&self) -> usize {
        self.n
    }

    fn value(&self, coalition: Coalition) -> Result<f64> {
        if coalition.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: coalition.n(),
            });
        }
        if coalition.is_empty() {
            return Ok(0.0);
        }
        let players: Vec<usize> = coalition.players().collect();
        let mut conn = self
            .conn
            .lock()
            .map_err(|_| protocol("connection poisoned by an earlier panic"))?;
        conn.eval(&players)
    }
}

/// Serves any in-process game over the bridge protocol. Handy for tests and
/// for exposing table files to other languages.
pub struct BridgeServer<G> {
    game: G,
}

impl<G: Game> BridgeServer<G> {
    pub fn new(game: G) -> Self {
        Self { game }
    }

    /// Answers requests until `bye` or end of input. Malformed requests get an
    /// `{"op":"error"}` reply and the session continues.
    pub fn serve<R: BufRead, W: Write>(&self, reader: R, mut writer: W) -> Result<()> {
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let reply = match self.answer(&line) {
                Ok(Some(reply)) => reply,
                Ok(None) => break,
                Err(msg) => json!({ "op": "error", "message": msg }),
            };
            let mut bytes = serde_json::to_vec(&reply).map_err(|e| protocol(e.to_string()))?;
            bytes.push(b'\n');
            writer.write_all(&bytes)?;
            writer.flush()?;
        }
        Ok(())
    }

    fn answer(&self, line: &str) -> std::result::Result<Option<Value>, String> {
        let request: Value = serde_json::from_str(line).map_err(|e| format!("malformed request: {e}"))?;
        match request.get("op").and_then(Value::as_str) {
            Some("hello") => Ok(Some(json!({ "op": "hello", "n": self.game.n() }))),
            Some("bye") => Ok(None),
            Some("eval") => {
                let id = request.get("id").and_then(Value::as_u64).ok_or("eval without integer id")?;
                let players = request
                    .get("players")
                    .and_then(Value::as_array)
                    .ok_or("eval without players array")?
                    .iter()
                    .map(|p| p.as_u64().map(|p| p as usize).ok_or("player index must be an integer"))
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                let coalition = Coalition::from_players(self.game.n(), players).map_err(|e| e.to_string())?;
                let value = self.game.value(coalition).map_err(|e| e.to_string())?;
                Ok(Some(json!({ "op": "eval", "id": id, "value": value })))
            }
            _ => Err(format!("unknown op in {request}")),
        }
    }
}
