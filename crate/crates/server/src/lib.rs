//! WebSocket host for sitesim sessions. One actor task per session owns the
//! authoritative [`Session`](sitesim_core::sync::Session); connections only forward.

mod conn;
mod host;
mod logs;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use sitesim_core::config::{ConfigError, ConfigSet};
use thiserror::Error;
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

pub use host::SessionHost;
pub use logs::{WireDir, WireLogLine};

#[derive(Debug, Error)]
pub enum ServerError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Clone)]
pub struct ServerOptions {
    pub configs: ConfigSet,
    /// Session config used when a hello does not name one.
    pub default_session: String,
    pub seed: u64,
    /// Overrides every session config's tick rate.
    pub tick_rate_hz: Option<u32>,
    /// JSONL of every wire message, both directions.
    pub wire_log: Option<PathBuf>,
    /// JSONL of applied intents, fired events and session outcomes.
    pub action_log: Option<PathBuf>,
}

impl ServerOptions {
    pub fn new(configs: ConfigSet, default_session: impl Into<String>) -> Self {
        ServerOptions {
            configs,
            default_session: default_session.into(),
            seed: 0,
            tick_rate_hz: None,
            wire_log: None,
            action_log: None,
        }
    }
}

pub struct RunningServer {
    pub addr: SocketAddr,
    pub host: Arc<SessionHost>,
    shutdown: oneshot::Sender<()>,
    task: JoinHandle<()>,
}

impl RunningServer {
    pub async fn shutdown(self) {
        let _ = self.shutdown.send(());
        let _ = self.task.await;
    }

    /// Run until the accept loop ends.
    pub async fn wait(self) {
        let _ = self.task.await;
    }
}

/// Bind and start accepting connections.
pub async fn start(addr: &str, opts: ServerOptions) -> Result<RunningServer, ServerError> {
    let host = Arc::new(SessionHost::new(opts)?);
    let listener = TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    let (tx, mut rx) = oneshot::channel::<()>();
    let h = Arc::clone(&host);
    let task = tokio::spawn(async move {
        loop {
            tokio::select! {
                _ = &mut rx => break,
                acc = listener.accept() => match acc {
                    Ok((stream, peer)) => {
                        let h = Arc::clone(&h);
                        tokio::spawn(async move {
                            if let Err(e) = conn::serve_connection(stream, h).await {
                                tracing::debug!(%peer, "connection ended: {e}");
                            }
                        });
                    }
                    Err(e) => tracing::warn!("accept failed: {e}"),
                },
            }
        }
    });
    tracing::info!(%local, "listening");
    Ok(RunningServer {
        addr: local,
        host,
        shutdown: tx,
        task,
    })
}
