//! Counting semaphore used to cap sandbox worktrees and in-flight requests.

use std::sync::{Condvar, Mutex};

#[derive(Debug)]
pub struct Semaphore {
    capacity: usize,
    state: Mutex<State>,
    cond: Condvar,
}

#[derive(Debug, Default)]
struct State {
    in_use: usize,
    peak: usize,
}

impl Semaphore {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            state: Mutex::new(State::default()),
            cond: Condvar::new(),
        }
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut state = self.state.lock().expect("semaphore poisoned");
        while state.in_use >= self.capacity {
            state = self.cond.wait(state).expect("semaphore poisoned");
        }
        state.in_use += 1;
        state.peak = state.peak.max(state.in_use);
        Permit { sem: self }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn in_use(&self) -> usize {
        self.state.lock().expect("semaphore poisoned").in_use
    }

    /// Highest number of permits held at the same time since creation.
    pub fn peak(&self) -> usize {
        self.state.lock().expect("semaphore poisoned").peak
    }

    fn release(&self) {
        let mut state = self.state.lock().expect("semaphore poisoned");
        state.in_use -= 1;
        drop(state);
        self.cond.notify_one();
    }
}

#[derive(Debug)]
pub struct Permit<'a> {
    sem: &'a Semaphore,
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        self.sem.release();
    }
}
