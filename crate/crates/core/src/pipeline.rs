//! The full ordinal localization chain: rank aggregation, function learning,
//! unfolding.

use ndarray::{Array1, ArrayView2};

use crate::error::{Error, Result};
use crate::funclearn::{preliminary_distances, recalibrate, EstimatedDistanceMatrix};
use crate::model::{anchor_distances, Block, ComparisonTensor, ProximityMatrix};
use crate::rank::aggregate_proximities;
use crate::scalar::Scalar;
use crate::unfold::{localize_all, BatchLocalization, SolverOptions};

/// Every intermediate of one pipeline run.
#[derive(Debug, Clone)]
pub struct PipelineOutput<T> {
    pub proximities: ProximityMatrix<T>,
    pub preliminary: EstimatedDistanceMatrix<T>,
    pub recalibrated: EstimatedDistanceMatrix<T>,
    pub localization: BatchLocalization<T>,
}

impl<T: Scalar> PipelineOutput<T> {
    /// Estimated target positions, `None` where a column failed.
    pub fn positions(&self) -> Vec<Option<Array1<T>>> {
        self.localization
            .results
            .iter()
            .map(|r| r.as_ref().ok().map(|r| r.position.clone()))
            .collect()
    }
}

/// Localizes every target from a comparison tensor over anchors (first rows)
/// and targets. Only anchor coordinates are used.
pub fn ordinal_unloc<T: Scalar>(
    anchors: ArrayView2<'_, T>,
    comparisons: &ComparisonTensor,
    opts: &SolverOptions<T>,
) -> Result<PipelineOutput<T>> {
    let m = anchors.nrows();
    if comparisons.order() < m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: comparisons.order(),
        });
    }
    let proximities = aggregate_proximities(comparisons, m)?;
    let d_y = anchor_distances(anchors);
    let preliminary = preliminary_distances(&proximities, d_y.block_view(Block::Y))?;
    let recalibrated = recalibrate(&proximities, &preliminary)?;
    let localization = localize_all(anchors, &recalibrated, opts)?;
    Ok(PipelineOutput {
        proximities,
        preliminary,
        recalibrated,
        localization,
    })
}
