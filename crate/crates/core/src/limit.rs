// SPDX-License-Identifier: Apache-2.0

//! Counting semaphore bounding concurrent model requests and checker runs.

use std::sync::{Condvar, Mutex};

pub(crate) struct Semaphore {
    limit: usize,
    active: Mutex<usize>,
    freed: Condvar,
}

impl Semaphore {
    pub(crate) fn new(limit: usize) -> Self {
        Semaphore { limit: limit.max(1), active: Mutex::new(0), freed: Condvar::new() }
    }

    pub(crate) fn acquire(&self) -> Permit<'_> {
        let mut active = self.active.lock().unwrap_or_else(|e| e.into_inner());
        while *active >= self.limit {
            active = self.freed.wait(active).unwrap_or_else(|e| e.into_inner());
        }
        *active += 1;
        Permit(self)
    }
}

pub(crate) struct Permit<'a>(&'a Semaphore);

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut active = self.0.active.lock().unwrap_or_else(|e| e.into_inner());
        *active -= 1;
        self.0.freed.notify_one();
    }
}
