use rand::Rng;

/// Ground height profile along the walking direction.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Terrain {
    #[default]
    Flat,
    /// A rigid box lying on flat ground between `start` and `end`.
    Obstacle { start: f64, end: f64, height: f64 },
    /// Piecewise-constant cells of width `cell` starting at `origin`.
    /// Outside the covered range the ground is flat at zero.
    Heightfield { origin: f64, cell: f64, heights: Vec<f64> },
}

impl Terrain {
    pub fn height(&self, x: f64) -> f64 {
        match self {
            Terrain::Flat => 0.0,
            Terrain::Obstacle { start, end, height } => {
                if x >= *start && x <= *end {
                    *height
                } else {
                    0.0
                }
            }
            Terrain::Heightfield { origin, cell, heights } => {
                let idx = ((x - origin) / cell).floor();
                if idx < 0.0 || idx as usize >= heights.len() {
                    0.0
                } else {
                    heights[idx as usize]
                }
            }
        }
    }

    /// The 1 cm box placed 0.6 m ahead of the start position.
    pub fn standard_obstacle() -> Self {
        Terrain::Obstacle { start: 0.6, end: 0.9, height: 0.01 }
    }

    /// Uniformly random cell heights in `[-amplitude, amplitude]`; cells starting
    /// before `flat_start` stay flat so the robot starts on level ground.
    pub fn random_heightfield<R: Rng + ?Sized>(
        rng: &mut R,
        amplitude: f64,
        cell: f64,
        length: f64,
        flat_start: f64,
    ) -> Self {
        let origin = -1.0;
        let n = ((length - origin) / cell).ceil() as usize;
        let heights = (0..n)
            .map(|i| {
                let x = origin + i as f64 * cell;
                if x < flat_start {
                    0.0
                } else {
                    rng.random_range(-amplitude..=amplitude)
                }
            })
            .collect();
        Terrain::Heightfield { origin, cell, heights }
    }
}
