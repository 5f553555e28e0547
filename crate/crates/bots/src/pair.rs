use std::collections::BTreeMap;
use std::time::Duration;

use sitesim_core::task::check_completion;
use sitesim_core::types::Role;

use crate::board::client_task;
use crate::client::{deadline_in, BotConn, ConnOptions};
use crate::fetcher::run_fetcher;
use crate::installer::run_installer;
use crate::transcript::{Transcript, TranscriptFooter, TranscriptHeader};
use crate::{BotError, BotScript, LatencyProfile, Policy};

#[derive(Debug, Clone, Copy)]
pub struct HarnessOptions {
    pub latency: LatencyProfile,
    pub latency_seed: u64,
    /// Passed to both bots; see [`ConnOptions::corrupt_every`].
    pub corrupt_every: Option<u64>,
    /// Wall-clock limit for the whole run.
    pub budget: Duration,
}

impl Default for HarnessOptions {
    fn default() -> Self {
        HarnessOptions {
            latency: LatencyProfile::None,
            latency_seed: 0,
            corrupt_every: None,
            budget: Duration::from_secs(120),
        }
    }
}

/// Start a fresh session of `config` and play it with two bots.
///
/// Only a failure to join is an `Err`; a run that goes wrong later still yields
/// a transcript, with the failure in its footer.
pub async fn run_pair(
    addr: &str,
    config: &str,
    seed: u64,
    installer: BotScript,
    fetcher: BotScript,
    opts: HarnessOptions,
) -> Result<Transcript, BotError> {
    let epoch = std::time::Instant::now();
    let deadline = deadline_in(opts.budget);
    let conn_opts = |salt: u64| ConnOptions {
        latency: opts.latency,
        latency_seed: opts.latency_seed.wrapping_mul(4).wrapping_add(salt),
        corrupt_every: opts.corrupt_every,
        deadline,
        epoch,
    };
    let mut ic = BotConn::join(addr, Role::Installer, "", Some(config), Some(seed), conn_opts(0)).await?;
    let session = ic.session.clone();
    let mut fc = BotConn::join(addr, Role::Fetcher, &session, None, None, conn_opts(2)).await?;

    let (ir, fr) = tokio::join!(run_installer(&mut ic, installer), run_fetcher(&mut fc, fetcher));
    let failure = match (&ir, &fr) {
        (Err(e), _) | (_, Err(e)) => Some(e),
        _ => None,
    };
    let (error, error_code) = match failure {
        Some(e) => (Some(e.to_string()), Some(e.code().to_string())),
        None => (None, None),
    };
    if error.is_none() {
        for c in [&mut ic, &mut fc] {
            c.wait_until("final resync", |c| c.in_sync()).await?;
        }
    }

    let briefing = ic.briefing.clone().or_else(|| fc.briefing.clone());
    let completion = match (&ir, &briefing) {
        (Ok(board), Some(b)) => client_task(b, board).map(|task| check_completion(ic.world(), &b.layout, &task)),
        _ => None,
    };
    let (final_batch_seq, final_hash) = if ic.batch_seq() >= fc.batch_seq() {
        (ic.batch_seq(), ic.last_batch_hash)
    } else {
        (fc.batch_seq(), fc.last_batch_hash)
    };
    let footer = TranscriptFooter {
        final_hash,
        final_batch_seq,
        phase: ic.phase(),
        mirror_hashes: BTreeMap::from([
            (Role::Installer, ic.mirror().hash()),
            (Role::Fetcher, fc.mirror().hash()),
        ]),
        completion,
        stats: BTreeMap::from([(Role::Installer, ic.stats.clone()), (Role::Fetcher, fc.stats.clone())]),
        error,
        error_code,
    };
    ic.close();
    fc.close();

    let mut wire = std::mem::take(&mut ic.log);
    wire.append(&mut fc.log);
    wire.sort_by_key(|w| w.t_ms);
    Ok(Transcript {
        header: TranscriptHeader {
            session,
            config: config.to_string(),
            seed,
            tick_rate_hz: briefing.map_or(0, |b| b.tick_rate_hz),
            installer,
            fetcher,
            latency: opts.latency,
        },
        wire,
        footer,
    })
}

/// The Installer against a Fetcher that never acts. Expected to end in `TimeoutError`.
pub async fn run_installer_alone(
    addr: &str,
    config: &str,
    seed: u64,
    opts: HarnessOptions,
) -> Result<Transcript, BotError> {
    run_pair(
        addr,
        config,
        seed,
        BotScript::new(Role::Installer, Policy::Canonical),
        BotScript::new(Role::Fetcher, Policy::Idle),
        opts,
    )
    .await
}
