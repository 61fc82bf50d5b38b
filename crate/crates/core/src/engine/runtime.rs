//! Threaded host for an [`Engine`]: a bounded event queue feeding a single
//! engine thread that also drives the timers off the wall clock.

use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use crossbeam_channel::{bounded, Receiver, RecvTimeoutError, Sender, TrySendError};
use parking_lot::{Condvar, Mutex};

use super::{Engine, Event, EventKind, EventOutcome, SharedStore};
use crate::dsl::Program;

pub const DEFAULT_QUEUE_CAPACITY: usize = 4096;

/// Idle wait when no timer is running.
const IDLE_POLL: Duration = Duration::from_millis(250);

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum EnqueueError {
    #[error("event queue is full")]
    Full,
    #[error("engine has stopped")]
    Closed,
}

/// Highest arrival number fully processed, with a wait primitive.
#[derive(Default)]
pub struct Progress {
    done: Mutex<u64>,
    cv: Condvar,
}

impl Progress {
    pub fn completed(&self) -> u64 {
        *self.done.lock()
    }

    fn mark(&self, seq: u64) {
        let mut done = self.done.lock();
        if seq > *done {
            *done = seq;
            self.cv.notify_all();
        }
    }

    /// Blocks until event `seq` has been processed or `timeout` elapses.
    pub fn wait_for(&self, seq: u64, timeout: Duration) -> bool {
        let deadline = Instant::now() + timeout;
        let mut done = self.done.lock();
        while *done < seq {
            if self.cv.wait_until(&mut done, deadline).timed_out() {
                return *done >= seq;
            }
        }
        true
    }
}

/// Callback run on the engine thread after every event and timer tick.
pub type OutcomeSink = Box<dyn FnMut(&EventOutcome) + Send>;

/// Cloneable front end to a running engine.
#[derive(Clone)]
pub struct EngineHandle {
    tx: Sender<Event>,
    next_arrival: Arc<Mutex<u64>>,
    progress: Arc<Progress>,
    store: SharedStore,
    program: Arc<Program>,
}

impl EngineHandle {
    /// Queues an event and returns its arrival number. Numbers are handed
    /// out under the same lock as the send, so queue order matches them.
    pub fn enqueue(&self, kind: EventKind) -> Result<u64, EnqueueError> {
        let mut next = self.next_arrival.lock();
        let arrival_seq = *next + 1;
        match self.tx.try_send(Event { kind, arrival_seq }) {
            Ok(()) => {
                *next = arrival_seq;
                Ok(arrival_seq)
            }
            Err(TrySendError::Full(_)) => Err(EnqueueError::Full),
            Err(TrySendError::Disconnected(_)) => Err(EnqueueError::Closed),
        }
    }

    pub fn wait_for(&self, arrival_seq: u64, timeout: Duration) -> bool {
        self.progress.wait_for(arrival_seq, timeout)
    }

    pub fn progress(&self) -> &Progress {
        &self.progress
    }

    pub fn store(&self) -> &SharedStore {
        &self.store
    }

    pub fn program(&self) -> &Arc<Program> {
        &self.program
    }
}

pub struct Runtime {
    handle: EngineHandle,
    thread: Option<JoinHandle<Engine>>,
}

impl Runtime {
    pub fn spawn(engine: Engine, queue_capacity: usize, sink: Option<OutcomeSink>) -> Runtime {
        let (tx, rx) = bounded(queue_capacity.max(1));
        let handle = EngineHandle {
            tx,
            next_arrival: Arc::new(Mutex::new(engine.last_arrival())),
            progress: Arc::new(Progress::default()),
            store: engine.store(),
            program: engine.shared_program(),
        };
        let progress = Arc::clone(&handle.progress);
        let thread = std::thread::Builder::new()
            .name("logiciot-engine".into())
            .spawn(move || engine_loop(engine, rx, progress, sink))
            .expect("spawn engine thread");
        Runtime {
            handle,
            thread: Some(thread),
        }
    }

    pub fn handle(&self) -> EngineHandle {
        self.handle.clone()
    }

    /// Queues a shutdown behind every pending event, waits for the engine
    /// to drain the queue and returns it.
    pub fn shutdown(mut self) -> Engine {
        self.stop().expect("engine thread present")
    }

    fn stop(&mut self) -> Option<Engine> {
        let thread = self.thread.take()?;
        let next = self.handle.next_arrival.lock();
        let _ = self.handle.tx.send(Event {
            kind: EventKind::Shutdown,
            arrival_seq: *next + 1,
        });
        drop(next);
        thread.join().ok()
    }
}

impl Drop for Runtime {
    fn drop(&mut self) {
        self.stop();
    }
}

fn engine_loop(
    mut engine: Engine,
    rx: Receiver<Event>,
    progress: Arc<Progress>,
    mut sink: Option<OutcomeSink>,
) -> Engine {
    let mut report = |o: &EventOutcome| {
        if let Some(s) = sink.as_mut() {
            s(o);
        }
    };
    loop {
        let now = engine.clock().now_ms();
        let wait = match engine.next_timer_due() {
            Some(due) => Duration::from_millis(due.saturating_sub(now)),
            None => IDLE_POLL,
        };
        match rx.recv_timeout(wait) {
            Ok(ev) => {
                let seq = ev.arrival_seq;
                let shutdown = ev.kind == EventKind::Shutdown;
                let outcome = engine.process_event(ev);
                report(&outcome);
                progress.mark(seq);
                if shutdown {
                    break;
                }
            }
            Err(RecvTimeoutError::Timeout) => {}
            Err(RecvTimeoutError::Disconnected) => {
                let _ = engine.flush();
                break;
            }
        }
        let now = engine.clock().now_ms();
        for outcome in engine.run_due_timers(now) {
            report(&outcome);
        }
    }
    engine
}
