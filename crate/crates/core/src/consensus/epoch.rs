//! Epoch rotation between FawkesCoin and lifted FawkesCoin.

use im::Vector;

use crate::params::EpochParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EpochKind {
    Fc,
    Lfc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpochSpan {
    pub kind: EpochKind,
    pub start: u64,
    pub len: u64,
    /// An LFC epoch opened by the throughput extension.
    pub extension: bool,
}

impl EpochSpan {
    pub fn last(&self) -> u64 {
        self.start + self.len - 1
    }

    pub fn contains(&self, h: u64) -> bool {
        h >= self.start && h <= self.last()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpochPosition {
    PreActivation,
    Fc(u64),
    Lfc(u64),
}

/// Position of `height` in the plain rotation from `era_start`, ignoring
/// extensions.
pub fn epoch_of(params: &EpochParams, era_start: Option<u64>, height: u64) -> EpochPosition {
    match era_start {
        Some(s) if height >= s => {
            let cycle = params.fc_len + params.lfc_len;
            let off = (height - s) % cycle;
            if off < params.fc_len {
                EpochPosition::Fc(off)
            } else {
                EpochPosition::Lfc(off - params.fc_len)
            }
        }
        _ => EpochPosition::PreActivation,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpochEnd {
    Rotate,
    Extend,
}

/// The epochs that actually happened, extensions included.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EpochTracker {
    pub current: Option<EpochSpan>,
    pub history: Vector<EpochSpan>,
}

impl EpochTracker {
    pub fn position(&self, height: u64) -> EpochPosition {
        match self.current {
            Some(s) if s.contains(height) => {
                let off = height - s.start;
                match s.kind {
                    EpochKind::Fc => EpochPosition::Fc(off),
                    EpochKind::Lfc => EpochPosition::Lfc(off),
                }
            }
            _ => EpochPosition::PreActivation,
        }
    }

    /// Open the first FC epoch when the era starts at `height`.
    pub fn begin_block(&mut self, params: &EpochParams, era_start: Option<u64>, height: u64) {
        if self.current.is_none() && era_start == Some(height) {
            self.current = Some(EpochSpan {
                kind: EpochKind::Fc,
                start: height,
                len: params.fc_len,
                extension: false,
            });
        }
    }

    pub fn is_last_block(&self, height: u64) -> Option<EpochKind> {
        self.current.filter(|s| s.last() == height).map(|s| s.kind)
    }

    /// Close the current epoch at its last block. `decision` only matters for
    /// LFC epochs.
    pub fn end_block(&mut self, params: &EpochParams, height: u64, decision: EpochEnd) {
        let Some(span) = self.current else { return };
        if span.last() != height {
            return;
        }
        self.history.push_back(span);
        let next = match (span.kind, decision) {
            (EpochKind::Fc, _) => EpochSpan {
                kind: EpochKind::Lfc,
                start: height + 1,
                len: params.lfc_len,
                extension: false,
            },
            (EpochKind::Lfc, EpochEnd::Extend) => EpochSpan {
                kind: EpochKind::Lfc,
                start: height + 1,
                len: params.lfc_len,
                extension: true,
            },
            (EpochKind::Lfc, EpochEnd::Rotate) => EpochSpan {
                kind: EpochKind::Fc,
                start: height + 1,
                len: params.fc_len,
                extension: false,
            },
        };
        self.current = Some(next);
    }

    /// Completed epochs followed by the current one.
    pub fn spans(&self) -> Vec<EpochSpan> {
        self.history.iter().copied().chain(self.current).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_rotation() {
        let p = EpochParams::default();
        assert_eq!(epoch_of(&p, None, 5), EpochPosition::PreActivation);
        assert_eq!(epoch_of(&p, Some(100), 99), EpochPosition::PreActivation);
        assert_eq!(epoch_of(&p, Some(100), 100), EpochPosition::Fc(0));
        assert_eq!(epoch_of(&p, Some(100), 2_000), EpochPosition::Lfc(0));
        assert_eq!(epoch_of(&p, Some(100), 2_500), EpochPosition::Fc(0));
    }

    #[test]
    fn tracker_matches_plain_rotation_without_extensions() {
        let p = EpochParams::default();
        let mut t = EpochTracker::default();
        for h in 0..10_000 {
            t.begin_block(&p, Some(50), h);
            assert_eq!(t.position(h), epoch_of(&p, Some(50), h), "height {h}");
            t.end_block(&p, h, EpochEnd::Rotate);
        }
    }

    #[test]
    fn extension_inserts_lfc_epoch() {
        let p = EpochParams::default();
        let mut t = EpochTracker::default();
        for h in 0..3_000 {
            t.begin_block(&p, Some(0), h);
            match h {
                2_400 => assert_eq!(t.position(h), EpochPosition::Lfc(0)),
                2_899 => assert_eq!(t.position(h), EpochPosition::Lfc(499)),
                2_900 => assert_eq!(t.position(h), EpochPosition::Fc(0)),
                _ => {}
            }
            let d = if h == 2_399 { EpochEnd::Extend } else { EpochEnd::Rotate };
            t.end_block(&p, h, d);
        }
        let spans = t.spans();
        assert_eq!(spans.len(), 4);
        assert!(spans[2].extension);
        assert_eq!(spans[3].kind, EpochKind::Fc);
        assert_eq!(spans[3].start, 2_900);
    }
}
