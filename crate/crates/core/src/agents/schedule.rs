use std::ops::RangeInclusive;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, ToeplitzOperator};

use super::History;

/// `T_i = 4(2^i − 1)L`, the end of data-poor epoch `i ≥ 1`.
pub fn datapoor_boundary(i: u32, l: usize) -> usize {
    4 * ((1usize << i) - 1) * l
}

/// `T̃_j = (2^{j+1} − 1)h`, the end of data-rich epoch `j ≥ 1`.
pub fn datarich_boundary(j: u32, h: usize) -> usize {
    ((1usize << (j + 1)) - 1) * h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    Datapoor,
    Datarich,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpochSchedule {
    pub kind: ScheduleKind,
    pub l: usize,
    pub h: usize,
    /// Epoch ends `≤ limit`, ascending; entry `n` ends epoch `n + 1`.
    pub boundaries: Vec<usize>,
}

impl EpochSchedule {
    pub fn datapoor(l: usize, h: usize, limit: usize) -> Self {
        let boundaries = (1..usize::BITS - 2)
            .map(|i| datapoor_boundary(i, l.max(1)))
            .take_while(|&b| b <= limit)
            .collect();
        Self {
            kind: ScheduleKind::Datapoor,
            l,
            h,
            boundaries,
        }
    }

    pub fn datarich(h: usize, limit: usize) -> Self {
        let boundaries = (1..usize::BITS - 2)
            .map(|j| datarich_boundary(j, h.max(1)))
            .take_while(|&b| b <= limit)
            .collect();
        Self {
            kind: ScheduleKind::Datarich,
            l: 0,
            h,
            boundaries,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpochEnd {
    DataPoor(u32),
    DataRich(u32),
}

/// Phase-one ends `T_i ≤ min(h, horizon)` followed by phase-two ends
/// `T̃_j ≤ horizon`.
pub fn combined_schedule(l: usize, h: usize, horizon: usize) -> Vec<(usize, EpochEnd)> {
    let mut out: Vec<(usize, EpochEnd)> = EpochSchedule::datapoor(l, h, h.min(horizon))
        .boundaries
        .into_iter()
        .zip(1..)
        .map(|(b, i)| (b, EpochEnd::DataPoor(i)))
        .collect();
    out.extend(
        EpochSchedule::datarich(h, horizon)
            .boundaries
            .into_iter()
            .zip(1..)
            .map(|(b, j)| (b, EpochEnd::DataRich(j))),
    );
    out
}

/// The second and fourth quarters of data-poor epoch `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkSelection {
    pub epoch: u32,
    pub quarter2_rows: RangeInclusive<usize>,
    pub quarter4_rows: RangeInclusive<usize>,
}

impl ChunkSelection {
    pub fn for_epoch(epoch: u32, l: usize) -> Result<Self> {
        if epoch == 0 || l == 0 {
            return Err(Error::Domain(format!("epoch and L must be positive (got {epoch}, {l})")));
        }
        let start = datapoor_boundary(epoch - 1, l);
        let q = (1usize << (epoch - 1)) * l;
        Ok(Self {
            epoch,
            quarter2_rows: start + q + 1..=start + 2 * q,
            quarter4_rows: start + 3 * q + 1..=start + 4 * q,
        })
    }

    pub fn quarter_len(&self) -> usize {
        self.quarter2_rows.clone().count()
    }
}

/// `(P̄, r̄)` with `P̄ = Ξ″ − Ξ′` over the first `n_blocks` block columns and
/// `r̄ = r″ − r′`, where `′` and `″` are the second and fourth quarters.
pub fn build_difference_system(history: &History, chunks: &ChunkSelection, n_blocks: usize) -> Result<(Matrix, Vec<f64>)> {
    let op = difference_operator(history, chunks, n_blocks)?;
    let rbar = difference_response(history, chunks);
    Ok((op.to_dense(), rbar))
}

pub(crate) fn difference_operator<'a>(history: &'a History, chunks: &ChunkSelection, n_blocks: usize) -> Result<ToeplitzOperator<'a>> {
    let needed = *chunks.quarter4_rows.end();
    if history.len() < needed {
        return Err(Error::InsufficientHistory {
            needed,
            available: history.len(),
        });
    }
    let d = history.contexts.first().map_or(0, Vec::len);
    ToeplitzOperator::difference(
        &history.contexts,
        chunks.quarter4_rows.clone().collect(),
        chunks.quarter2_rows.clone().collect(),
        n_blocks,
        d,
    )
}

pub(crate) fn difference_response(history: &History, chunks: &ChunkSelection) -> Vec<f64> {
    chunks
        .quarter4_rows
        .clone()
        .zip(chunks.quarter2_rows.clone())
        .map(|(b, a)| history.reward(b) - history.reward(a))
        .collect()
}
