use serde::{Deserialize, Serialize};

use crate::channel::{aggregate_for, dot, LosChannelSet, C64};
use crate::error::{domain, Result};
use crate::geometry::Cartesian;

/// Floor applied to zero received power when converting to dBm.
pub const POWER_FLOOR_DBM: f64 = -300.0;

pub fn mw_to_dbm(p: f64) -> f64 {
    if p > 0.0 {
        (10.0 * p.log10()).max(POWER_FLOOR_DBM)
    } else {
        POWER_FLOOR_DBM
    }
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Cell-centred ground grid; `z = None` uses the scene ground level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
    #[serde(default)]
    pub z: Option<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            x_min: 0.0,
            x_max: 25.0,
            y_min: 0.0,
            y_max: 25.0,
            nx: 64,
            ny: 64,
            z: None,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 || !(self.x_max > self.x_min) || !(self.y_max > self.y_min) {
            return domain("grid needs positive resolution and a non-empty extent");
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / self.ny as f64
    }

    pub fn centre(&self, ix: usize, iy: usize) -> (f64, f64) {
        (
            self.x_min + (ix as f64 + 0.5) * self.dx(),
            self.y_min + (iy as f64 + 0.5) * self.dy(),
        )
    }

    /// Cell containing `(x, y)`, clamped to the grid.
    pub fn cell_of(&self, x: f64, y: f64) -> (usize, usize) {
        let ix = ((x - self.x_min) / self.dx()).floor().clamp(0.0, (self.nx - 1) as f64) as usize;
        let iy = ((y - self.y_min) / self.dy()).floor().clamp(0.0, (self.ny - 1) as f64) as usize;
        (ix, iy)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BeamCell {
    pub x: f64,
    pub y: f64,
    pub power_dbm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Marker {
    /// `user0`, `user1`, ... or `eve`.
    pub label: String,
    pub x: f64,
    pub y: f64,
    /// Power at the exact receiver position.
    pub power_dbm: f64,
    /// Power of the grid cell containing the receiver.
    pub cell_power_dbm: f64,
    pub inside: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BeamMap {
    pub grid: GridSpec,
    /// Row-major in x then y.
    pub cells: Vec<BeamCell>,
    pub markers: Vec<Marker>,
}

impl BeamMap {
    pub fn cell(&self, ix: usize, iy: usize) -> &BeamCell {
        &self.cells[ix * self.grid.ny + iy]
    }

    pub fn user_markers(&self) -> impl Iterator<Item = &Marker> {
        self.markers.iter().filter(|m| m.label != "eve")
    }

    pub fn eve_marker(&self) -> Option<&Marker> {
        self.markers.iter().find(|m| m.label == "eve")
    }
}

/// `|h^LoS(p) w|^2` of a virtual single-antenna receiver at `p`, in mW.
pub fn received_power(set: &LosChannelSet, refl: &[C64], w: &[C64], p: Cartesian) -> Result<f64> {
    let rx = set.virtual_receiver(p)?;
    Ok(dot(&aggregate_for(set, &rx, refl), w).norm_sqr())
}

pub fn beam_response_map(
    set: &LosChannelSet,
    refl: &[C64],
    w: &[C64],
    grid: &GridSpec,
    ground_z: f64,
) -> Result<BeamMap> {
    grid.validate()?;
    let z = grid.z.unwrap_or(ground_z);
    let mut cells = Vec::with_capacity(grid.nx * grid.ny);
    for ix in 0..grid.nx {
        for iy in 0..grid.ny {
            let (x, y) = grid.centre(ix, iy);
            let p = received_power(set, refl, w, Cartesian::new(x, y, z))?;
            cells.push(BeamCell {
                x,
                y,
                power_dbm: mw_to_dbm(p),
            });
        }
    }
    let mut map = BeamMap {
        grid: *grid,
        cells,
        markers: Vec::new(),
    };
    let k = set.k_users;
    for (g, rx) in set.receivers.iter().enumerate() {
        let label = if g < k { format!("user{g}") } else { "eve".to_string() };
        let pos = rx.position;
        let (ix, iy) = grid.cell_of(pos.x, pos.y);
        let inside = pos.x >= grid.x_min && pos.x <= grid.x_max && pos.y >= grid.y_min && pos.y <= grid.y_max;
        let exact = dot(&aggregate_for(set, rx, refl), w).norm_sqr();
        map.markers.push(Marker {
            label,
            x: pos.x,
            y: pos.y,
            power_dbm: mw_to_dbm(exact),
            cell_power_dbm: map.cell(ix, iy).power_dbm,
            inside,
        });
    }
    Ok(map)
}
