//! Bounded, blocking record channel between the simulator and the datastore.

use std::sync::mpsc::{sync_channel, Receiver, RecvTimeoutError, SyncSender};
use std::time::Duration;

use super::{EdgeTrafficRecord, RecordSink, SimError};

/// Creates a single-producer, single-consumer channel holding at most
/// `capacity` records. The producer blocks while the buffer is full.
pub fn bounded(capacity: usize) -> (Publisher, Subscriber) {
    let (tx, rx) = sync_channel(capacity.max(1));
    (Publisher { tx, sent: 0 }, Subscriber { rx })
}

pub struct Publisher {
    tx: SyncSender<EdgeTrafficRecord>,
    sent: u64,
}

impl Publisher {
    pub fn send(&mut self, record: EdgeTrafficRecord) -> Result<(), SimError> {
        self.tx.send(record).map_err(|_| SimError::ChannelClosed)?;
        self.sent += 1;
        Ok(())
    }

    pub fn sent(&self) -> u64 {
        self.sent
    }
}

impl RecordSink for Publisher {
    fn consume(&mut self, window: &[EdgeTrafficRecord]) -> Result<(), SimError> {
        for r in window {
            self.send(r.clone())?;
        }
        Ok(())
    }
}

pub struct Subscriber {
    rx: Receiver<EdgeTrafficRecord>,
}

impl Subscriber {
    /// Blocks for the next record; `None` once the publisher is gone and the
    /// buffer is drained.
    pub fn recv(&self) -> Option<EdgeTrafficRecord> {
        self.rx.recv().ok()
    }

    /// Receives up to `max` records, returning early when the stream ends or
    /// when no record arrives within `linger`. An empty vector means the
    /// stream is finished.
    pub fn recv_batch(&self, max: usize, linger: Duration) -> Vec<EdgeTrafficRecord> {
        let mut batch = Vec::with_capacity(max);
        let Ok(first) = self.rx.recv() else {
            return batch;
        };
        batch.push(first);
        while batch.len() < max {
            match self.rx.recv_timeout(linger) {
                Ok(r) => batch.push(r),
                Err(RecvTimeoutError::Timeout) | Err(RecvTimeoutError::Disconnected) => break,
            }
        }
        batch
    }
}
