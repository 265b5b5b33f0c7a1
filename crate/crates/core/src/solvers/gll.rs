use std::collections::VecDeque;

/// Last `m` objective values `f(y^{k-j}, p^{k-j})`, `j = 0..min(k, m-1)`.
#[derive(Debug, Clone)]
pub(crate) struct History {
    values: VecDeque<f64>,
    m: usize,
}

impl History {
    pub(crate) fn new(m: usize) -> Self {
        Self {
            values: VecDeque::with_capacity(m),
            m,
        }
    }

    pub(crate) fn push(&mut self, f: f64) {
        if self.values.len() == self.m {
            self.values.pop_front();
        }
        self.values.push_back(f);
    }

    pub(crate) fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub(crate) fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_keeps_last_m() {
        let mut h = History::new(3);
        for v in [5.0, 1.0, 4.0, 3.0] {
            h.push(v);
        }
        assert_eq!(h.max(), 4.0);
        assert_eq!(h.min(), 1.0);
        h.push(6.0);
        assert_eq!(h.min(), 3.0);
    }
}
