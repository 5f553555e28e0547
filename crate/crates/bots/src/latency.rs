use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use tokio::sync::mpsc;
use tokio::time::Instant;

/// Artificial one-way delay applied to every bot message, both directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LatencyProfile {
    #[default]
    None,
    Fixed {
        ms: u64,
    },
    /// Uniform in [0, ms].
    Jitter {
        ms: u64,
    },
}

impl LatencyProfile {
    fn sample(self, rng: &mut ChaCha8Rng) -> Duration {
        match self {
            LatencyProfile::None => Duration::ZERO,
            LatencyProfile::Fixed { ms } => Duration::from_millis(ms),
            LatencyProfile::Jitter { ms } => Duration::from_millis(rng.gen_range(0..=ms)),
        }
    }
}

/// Forward messages after their sampled delay without reordering them.
/// Each message is stamped when it enters the line, so queueing behind a slow one adds no extra delay.
pub(crate) async fn delay_line(
    mut rx: mpsc::UnboundedReceiver<(Instant, String)>,
    tx: mpsc::UnboundedSender<String>,
    profile: LatencyProfile,
    seed: u64,
) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last = Instant::now();
    while let Some((stamp, msg)) = rx.recv().await {
        if profile != LatencyProfile::None {
            let at = (stamp + profile.sample(&mut rng)).max(last);
            last = at;
            tokio::time::sleep_until(at).await;
        }
        if tx.send(msg).is_err() {
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[tokio::test]
    async fn jitter_keeps_order_and_bounds() {
        let (in_tx, in_rx) = mpsc::unbounded_channel();
        let (out_tx, mut out_rx) = mpsc::unbounded_channel();
        tokio::spawn(delay_line(in_rx, out_tx, LatencyProfile::Jitter { ms: 30 }, 1));
        let start = Instant::now();
        for i in 0..20 {
            in_tx.send((Instant::now(), i.to_string())).unwrap();
        }
        drop(in_tx);
        let mut got = Vec::new();
        while let Some(m) = out_rx.recv().await {
            got.push(m.parse::<u32>().unwrap());
        }
        assert_eq!(got, (0..20).collect::<Vec<_>>());
        assert!(start.elapsed() <= Duration::from_millis(300));
    }
}
