use std::sync::Arc;

use futures_util::{SinkExt, StreamExt};
use sitesim_core::sync::{ClientEnvelope, ClientMsg, Envelope, ServerMsg, PROTOCOL_VERSION};
use sitesim_core::task::Intent;
use thiserror::Error;
use tokio::net::TcpStream;
use tokio::sync::{mpsc, oneshot};
use tokio_tungstenite::tungstenite::Message;

use crate::host::{Cmd, SessionHost};
use crate::logs::{wire_in, wire_out};

#[derive(Debug, Error)]
pub(crate) enum ConnError {
    #[error(transparent)]
    Ws(#[from] tokio_tungstenite::tungstenite::Error),
    #[error("closed before hello")]
    NoHello,
    #[error("rejected: {0}")]
    Rejected(String),
}

enum Parsed {
    Msg(ClientEnvelope),
    Bad(&'static str, String),
    Close,
    Skip,
}

fn parse(msg: Message) -> Parsed {
    match msg {
        Message::Text(t) => match serde_json::from_str::<ClientEnvelope>(&t) {
            Ok(env) if env.v != PROTOCOL_VERSION => Parsed::Bad(
                "VersionError",
                format!(
                    "protocol version {} is not supported; expected {PROTOCOL_VERSION}",
                    env.v
                ),
            ),
            Ok(env) => Parsed::Msg(env),
            Err(e) => Parsed::Bad("ProtocolError", e.to_string()),
        },
        Message::Close(_) => Parsed::Close,
        Message::Binary(_) => Parsed::Bad("ProtocolError", "binary frames are not accepted".into()),
        _ => Parsed::Skip,
    }
}

pub(crate) async fn serve_connection(stream: TcpStream, host: Arc<SessionHost>) -> Result<(), ConnError> {
    let ws = tokio_tungstenite::accept_async(stream).await?;
    let (mut sink, mut source) = ws.split();
    let conn = host.next_conn();

    // Pre-join replies go straight to the socket.
    let mut pre_seq = 0u64;
    let (hello, role, token, config, seed) = loop {
        let Some(msg) = source.next().await else {
            return Err(ConnError::NoHello);
        };
        let (code, message) = match parse(msg?) {
            Parsed::Msg(env) => match env.body.clone() {
                ClientMsg::Hello {
                    role,
                    token,
                    config,
                    seed,
                } => {
                    wire_in(&host.wire, conn, Some(role), &env);
                    break (env, role, token, config, seed);
                }
                _ => ("ProtocolError", "expected hello".to_string()),
            },
            Parsed::Bad(code, m) => (code, m),
            Parsed::Close => return Err(ConnError::NoHello),
            Parsed::Skip => continue,
        };
        pre_seq += 1;
        let env = Envelope::new(
            "",
            pre_seq,
            0,
            ServerMsg::Error {
                code: code.into(),
                message,
            },
        );
        wire_out(&host.wire, conn, None, &env);
        sink.send(Message::Text(serde_json::to_string(&env).unwrap_or_default()))
            .await?;
    };

    let id = if hello.session.is_empty() {
        None
    } else {
        Some(hello.session.as_str())
    };
    let joined = match host.create_session(id, config.as_deref(), seed) {
        Ok(id) => match host.sender(&id) {
            Some(tx) => {
                let (out_tx, out_rx) = mpsc::unbounded_channel();
                let (reply_tx, reply_rx) = oneshot::channel();
                let _ = tx.send(Cmd::Join {
                    role,
                    token,
                    conn,
                    out: out_tx.clone(),
                    reply: reply_tx,
                });
                match reply_rx.await {
                    Ok(Ok(())) => Ok((id, tx, out_tx, out_rx)),
                    Ok(Err(e)) => Err((e.code().to_string(), e.to_string())),
                    Err(_) => Err(("SessionClosedError".into(), "session closed".into())),
                }
            }
            None => Err(("SessionClosedError".into(), "session closed".into())),
        },
        Err(e) => Err(("UnknownConfigError".into(), e.to_string())),
    };
    let (session_id, tx, out_tx, mut out_rx) = match joined {
        Ok(j) => j,
        Err((code, message)) => {
            let env = Envelope::new(
                hello.session.clone(),
                pre_seq + 1,
                0,
                ServerMsg::Error {
                    code: code.clone(),
                    message: message.clone(),
                },
            );
            wire_out(&host.wire, conn, Some(role), &env);
            sink.send(Message::Text(serde_json::to_string(&env).unwrap_or_default()))
                .await?;
            let _ = sink.close().await;
            return Err(ConnError::Rejected(format!("{code}: {message}")));
        }
    };

    let wire = host.wire.clone();
    let sid = session_id.clone();
    let writer = tokio::spawn(async move {
        let mut seq = pre_seq;
        let mut last_tick = 0;
        while let Some((tick, msg)) = out_rx.recv().await {
            if let Some(t) = tick {
                last_tick = t;
            }
            seq += 1;
            let env = Envelope::new(sid.clone(), seq, last_tick, msg);
            wire_out(&wire, conn, Some(role), &env);
            let text = serde_json::to_string(&env).unwrap_or_default();
            if sink.send(Message::Text(text)).await.is_err() {
                break;
            }
        }
        let _ = sink.close().await;
    });

    let mut last_seq = hello.seq;
    let local_error = |code: &str, message: String| {
        let _ = out_tx.send((
            None,
            ServerMsg::Error {
                code: code.into(),
                message,
            },
        ));
    };
    while let Some(msg) = source.next().await {
        let Ok(msg) = msg else { break };
        let env = match parse(msg) {
            Parsed::Msg(env) => env,
            Parsed::Bad(code, m) => {
                local_error(code, m);
                continue;
            }
            Parsed::Close => break,
            Parsed::Skip => continue,
        };
        wire_in(&host.wire, conn, Some(role), &env);
        if env.seq <= last_seq {
            local_error(
                "ProtocolError",
                format!("seq {} does not increase past {last_seq}", env.seq),
            );
            continue;
        }
        last_seq = env.seq;
        let cmd = match env.body {
            ClientMsg::Intent { client_ref, intent } => Cmd::Submit {
                role,
                conn,
                client_ref,
                intent,
            },
            ClientMsg::Chat { client_ref, text } => Cmd::Submit {
                role,
                conn,
                client_ref,
                intent: Intent::Chat { text },
            },
            ClientMsg::ResyncRequest => Cmd::Resync { role, conn },
            ClientMsg::Ping { nonce } => {
                let _ = out_tx.send((None, ServerMsg::Pong { nonce }));
                continue;
            }
            ClientMsg::Hello { .. } => {
                local_error("ProtocolError", "already joined".into());
                continue;
            }
        };
        if tx.send(cmd).is_err() {
            break;
        }
    }
    let _ = tx.send(Cmd::Disconnect { role, conn });
    drop(out_tx);
    let _ = writer.await;
    Ok(())
}
