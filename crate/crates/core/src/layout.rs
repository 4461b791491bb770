//! Patch geometry, sensor sets and probe plans.
//!
//! All coordinates are millimeters with the origin at a patch corner, `x`
//! running along the long axis and `y` across the short axis.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance used when matching probe coordinates to grid nodes.
pub const POSITION_TOLERANCE_MM: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LayoutError {
    #[error("patch dimensions must be finite and positive, got {width_mm} x {height_mm} mm")]
    InvalidDimensions { width_mm: f64, height_mm: f64 },
    #[error("{axis} electrode list is empty")]
    NoElectrodes { axis: &'static str },
    #[error("{axis} electrode {index} at {value_mm} mm lies outside the open patch interval (0, {limit_mm})")]
    ElectrodeOutside {
        axis: &'static str,
        index: usize,
        value_mm: f64,
        limit_mm: f64,
    },
    #[error("{axis} electrodes must be strictly increasing (index {index})")]
    NotIncreasing { axis: &'static str, index: usize },
    #[error("probe grid needs at least 2 rows and 2 columns, got {rows} x {cols}")]
    GridTooSmall { rows: usize, cols: usize },
    #[error("probe grid axis {axis} must be finite and strictly increasing")]
    BadGridAxis { axis: &'static str },
    #[error("probe location ({x}, {y}) mm lies outside the patch")]
    ProbeOutside { x: f64, y: f64 },
}

/// A point on the patch surface, in millimeters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<(f64, f64)> for Point2 {
    fn from((x, y): (f64, f64)) -> Self {
        Self { x, y }
    }
}

/// Rectangular patch with transmit electrodes running across it at fixed `x`
/// and receive electrodes running along it at fixed `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchLayout {
    width_mm: f64,
    height_mm: f64,
    transmit_x_mm: Vec<f64>,
    receive_y_mm: Vec<f64>,
}

impl PatchLayout {
    pub fn new(
        width_mm: f64,
        height_mm: f64,
        transmit_x_mm: Vec<f64>,
        receive_y_mm: Vec<f64>,
    ) -> Result<Self, LayoutError> {
        if !(width_mm.is_finite() && height_mm.is_finite() && width_mm > 0.0 && height_mm > 0.0) {
            return Err(LayoutError::InvalidDimensions { width_mm, height_mm });
        }
        check_electrodes("transmit", &transmit_x_mm, width_mm)?;
        check_electrodes("receive", &receive_y_mm, height_mm)?;
        Ok(Self {
            width_mm,
            height_mm,
            transmit_x_mm,
            receive_y_mm,
        })
    }

    pub fn width_mm(&self) -> f64 {
        self.width_mm
    }

    pub fn height_mm(&self) -> f64 {
        self.height_mm
    }

    pub fn transmit_x_mm(&self) -> &[f64] {
        &self.transmit_x_mm
    }

    pub fn receive_y_mm(&self) -> &[f64] {
        &self.receive_y_mm
    }

    pub fn sensor_count(&self) -> usize {
        self.transmit_x_mm.len() * self.receive_y_mm.len()
    }

    /// True when `p` lies in the closed patch rectangle.
    pub fn contains(&self, p: Point2) -> bool {
        p.x.is_finite()
            && p.y.is_finite()
            && (0.0..=self.width_mm).contains(&p.x)
            && (0.0..=self.height_mm).contains(&p.y)
    }

    pub fn sensors(&self) -> SensorSet {
        SensorSet::from_layout(self)
    }
}

fn check_electrodes(axis: &'static str, coords: &[f64], limit_mm: f64) -> Result<(), LayoutError> {
    if coords.is_empty() {
        return Err(LayoutError::NoElectrodes { axis });
    }
    for (index, &value_mm) in coords.iter().enumerate() {
        if !(value_mm.is_finite() && value_mm > 0.0 && value_mm < limit_mm) {
            return Err(LayoutError::ElectrodeOutside {
                axis,
                index,
                value_mm,
                limit_mm,
            });
        }
        if index > 0 && coords[index - 1] >= value_mm {
            return Err(LayoutError::NotIncreasing { axis, index });
        }
    }
    Ok(())
}

/// Ground-truth sensor positions: every transmit/receive crossing.
///
/// Sensors are numbered the way the hardware scans them: transmit electrodes
/// in increasing `x` (outer loop), and for each of them the receive electrodes
/// from the far edge (largest `y`) down to the nearest one. Sensor `id` thus
/// sits at `(transmit_x[id / R], receive_y[R - 1 - id % R])`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorSet {
    positions_mm: Vec<Point2>,
}

impl SensorSet {
    pub fn from_layout(layout: &PatchLayout) -> Self {
        let rx = layout.receive_y_mm();
        let positions_mm = layout
            .transmit_x_mm()
            .iter()
            .flat_map(|&x| rx.iter().rev().map(move |&y| Point2::new(x, y)))
            .collect();
        Self { positions_mm }
    }

    pub fn len(&self) -> usize {
        self.positions_mm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions_mm.is_empty()
    }

    pub fn positions_mm(&self) -> &[Point2] {
        &self.positions_mm
    }

    pub fn position(&self, id: usize) -> Option<Point2> {
        self.positions_mm.get(id).copied()
    }

    pub fn ids(&self) -> std::ops::Range<usize> {
        0..self.positions_mm.len()
    }
}

/// Evenly spaced transmit electrodes, 11 at 13.5 mm pitch, and two receive
/// electrodes 10 mm apart, both centered on a 152.4 x 25.4 mm patch.
pub fn make_patch_a() -> PatchLayout {
    const WIDTH: f64 = 152.4;
    const HEIGHT: f64 = 25.4;
    // tenths of a millimeter, so every coordinate is the nearest double to
    // its decimal value
    let transmit = (0..11).map(|i| (87 + 135 * i) as f64 / 10.0).collect();
    let receive = vec![7.7, 17.7];
    PatchLayout::new(WIDTH, HEIGHT, transmit, receive).expect("patch A fixture is valid")
}

/// Default transmit coordinates for the variable-density patch.
///
/// Only the end electrodes (5.5 and 148.4 mm) and the spacing range
/// (3.2 mm to 28.6 mm) are fixed; the interior positions are a fixture that
/// densifies toward `x = 0`.
pub const PATCH_B_TRANSMIT_X_MM: [f64; 10] =
    [5.5, 8.7, 13.5, 21.4, 33.3, 49.2, 70.0, 95.0, 119.8, 148.4];

pub const PATCH_B_RECEIVE_Y_MM: [f64; 3] = [7.2, 13.5, 19.8];

/// Variable-density patch with the default transmit fixture.
pub fn make_patch_b() -> PatchLayout {
    make_patch_b_with(PATCH_B_TRANSMIT_X_MM.to_vec()).expect("patch B fixture is valid")
}

/// Variable-density patch with caller-supplied transmit coordinates.
pub fn make_patch_b_with(transmit_x_mm: Vec<f64>) -> Result<PatchLayout, LayoutError> {
    PatchLayout::new(152.4, 25.4, transmit_x_mm, PATCH_B_RECEIVE_Y_MM.to_vec())
}

/// Probe positions on a rectilinear grid.
///
/// Locations are stored row-major: index `r * cols + c` is the probe at
/// `(x_nodes[c], y_nodes[r])`. Rows run along `y`, columns along `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbePlan {
    x_nodes: Vec<f64>,
    y_nodes: Vec<f64>,
    locations_mm: Vec<Point2>,
}

impl ProbePlan {
    /// Plan over the Cartesian product of two strictly increasing axes.
    pub fn rectilinear(x_nodes: Vec<f64>, y_nodes: Vec<f64>) -> Result<Self, LayoutError> {
        check_axis("x", &x_nodes)?;
        check_axis("y", &y_nodes)?;
        let locations_mm = y_nodes
            .iter()
            .flat_map(|&y| x_nodes.iter().map(move |&x| Point2::new(x, y)))
            .collect();
        Ok(Self {
            x_nodes,
            y_nodes,
            locations_mm,
        })
    }

    pub fn rows(&self) -> usize {
        self.y_nodes.len()
    }

    pub fn cols(&self) -> usize {
        self.x_nodes.len()
    }

    pub fn len(&self) -> usize {
        self.locations_mm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations_mm.is_empty()
    }

    pub fn x_nodes(&self) -> &[f64] {
        &self.x_nodes
    }

    pub fn y_nodes(&self) -> &[f64] {
        &self.y_nodes
    }

    pub fn locations_mm(&self) -> &[Point2] {
        &self.locations_mm
    }

    pub fn location(&self, row: usize, col: usize) -> Point2 {
        self.locations_mm[row * self.cols() + col]
    }

    /// Grid cell `(row, col)` whose node matches `p` within
    /// [`POSITION_TOLERANCE_MM`] on both axes.
    pub fn cell_of(&self, p: Point2) -> Option<(usize, usize)> {
        Some((find_node(&self.y_nodes, p.y)?, find_node(&self.x_nodes, p.x)?))
    }

    /// Checks every location against the patch rectangle.
    pub fn check_within(&self, layout: &PatchLayout) -> Result<(), LayoutError> {
        match self.locations_mm.iter().find(|p| !layout.contains(**p)) {
            Some(p) => Err(LayoutError::ProbeOutside { x: p.x, y: p.y }),
            None => Ok(()),
        }
    }
}

fn check_axis(axis: &'static str, nodes: &[f64]) -> Result<(), LayoutError> {
    let ok = nodes.iter().all(|v| v.is_finite()) && nodes.windows(2).all(|w| w[0] < w[1]);
    if ok {
        Ok(())
    } else {
        Err(LayoutError::BadGridAxis { axis })
    }
}

fn find_node(nodes: &[f64], v: f64) -> Option<usize> {
    let i = nodes.partition_point(|&n| n < v - POSITION_TOLERANCE_MM);
    (i < nodes.len() && (nodes[i] - v).abs() <= POSITION_TOLERANCE_MM).then_some(i)
}

/// Cell-centered `rows x cols` grid over the whole patch: each probe sits in
/// the middle of its cell, half a pitch in from the patch edges.
pub fn uniform_probe_plan(
    layout: &PatchLayout,
    rows: usize,
    cols: usize,
) -> Result<ProbePlan, LayoutError> {
    if rows < 2 || cols < 2 {
        return Err(LayoutError::GridTooSmall { rows, cols });
    }
    let centers = |n: usize, extent: f64| -> Vec<f64> {
        (0..n).map(|i| (i as f64 + 0.5) * extent / n as f64).collect()
    };
    ProbePlan::rectilinear(
        centers(cols, layout.width_mm()),
        centers(rows, layout.height_mm()),
    )
}
