//! Qubit layout of the rotated planar surface code.
//!
//! Data qubits sit on a `d x d` grid indexed by `(row, col)`. Check plaquettes
//! are indexed by the data qubit at their north-west corner, so plaquette
//! `(r, c)` covers rows `r, r+1` and columns `c, c+1` and may hang off the
//! grid by one row or column on the boundary. A plaquette with `r + c` even is
//! a Z check. Weight-two Z checks line the top and bottom edges, weight-two X
//! checks line the left and right edges, so X errors on the left and right
//! columns trigger a single Z check.

/// Corner of a plaquette, named by compass direction on the data grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Corner {
    NorthWest,
    NorthEast,
    SouthWest,
    SouthEast,
}

impl Corner {
    pub const ALL: [Corner; 4] = [
        Corner::NorthWest,
        Corner::NorthEast,
        Corner::SouthWest,
        Corner::SouthEast,
    ];

    /// Data-grid offset of this corner from the plaquette's north-west data qubit.
    pub fn offset(self) -> (i32, i32) {
        match self {
            Corner::NorthWest => (0, 0),
            Corner::NorthEast => (0, 1),
            Corner::SouthWest => (1, 0),
            Corner::SouthEast => (1, 1),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckBasis {
    Z,
    X,
}

#[derive(Debug, Clone)]
pub struct Check {
    pub basis: CheckBasis,
    pub row: i32,
    pub col: i32,
    pub ancilla: usize,
    /// Data qubit at each corner, `None` where the plaquette overhangs the grid.
    pub data: [Option<usize>; 4],
}

impl Check {
    pub fn weight(&self) -> usize {
        self.data.iter().flatten().count()
    }

    pub fn data_at(&self, corner: Corner) -> Option<usize> {
        self.data[corner.index()]
    }
}

/// Physical layout: `d^2` data qubits followed by Z ancillas then X ancillas.
#[derive(Debug, Clone)]
pub struct Layout {
    distance: usize,
    z_checks: Vec<Check>,
    x_checks: Vec<Check>,
}

/// Position of a Z plaquette in the decoded lattice frame, `(x1, x2)`.
///
/// The frame is rotated 45 degrees from the data grid so that every data
/// qubit between two Z checks is a unit step along one axis. The column of
/// the plaquette (distance to the logical boundary) is `x1 - x2`.
pub fn lattice_position(row: i32, col: i32, distance: usize) -> (i32, i32) {
    debug_assert!((row + col).rem_euclid(2) == 0);
    let half = (distance as i32 - 1) / 2;
    let x1 = (row + col) / 2 + 1 + half;
    let x2 = (row - col) / 2 + half;
    (x1, x2)
}

impl Layout {
    pub fn new(distance: usize) -> Self {
        let d = distance as i32;
        let data_index = |r: i32, c: i32| -> Option<usize> {
            ((0..d).contains(&r) && (0..d).contains(&c)).then_some((r * d + c) as usize)
        };
        let plaquette = |basis, r: i32, c: i32| Check {
            basis,
            row: r,
            col: c,
            ancilla: 0,
            data: Corner::ALL.map(|corner| {
                let (dr, dc) = corner.offset();
                data_index(r + dr, c + dc)
            }),
        };

        let mut z_checks = Vec::new();
        let mut x_checks = Vec::new();
        for r in -1..d {
            for c in -1..d {
                let interior = (0..d - 1).contains(&r) && (0..d - 1).contains(&c);
                let even = (r + c).rem_euclid(2) == 0;
                if even && (interior || ((r == -1 || r == d - 1) && (0..d - 1).contains(&c))) {
                    z_checks.push(plaquette(CheckBasis::Z, r, c));
                } else if !even
                    && (interior || ((c == -1 || c == d - 1) && (0..d - 1).contains(&r)))
                {
                    x_checks.push(plaquette(CheckBasis::X, r, c));
                }
            }
        }

        // Z checks are stored in raster order of the decoded lattice, (x2, x1).
        z_checks.sort_by_key(|ch| {
            let (x1, x2) = lattice_position(ch.row, ch.col, distance);
            (x2, x1)
        });
        let n_data = distance * distance;
        for (i, ch) in z_checks.iter_mut().enumerate() {
            ch.ancilla = n_data + i;
        }
        let nz = z_checks.len();
        for (i, ch) in x_checks.iter_mut().enumerate() {
            ch.ancilla = n_data + nz + i;
        }
        Layout {
            distance,
            z_checks,
            x_checks,
        }
    }

    pub fn distance(&self) -> usize {
        self.distance
    }

    pub fn num_data(&self) -> usize {
        self.distance * self.distance
    }

    pub fn num_qubits(&self) -> usize {
        self.num_data() + self.z_checks.len() + self.x_checks.len()
    }

    pub fn z_checks(&self) -> &[Check] {
        &self.z_checks
    }

    pub fn x_checks(&self) -> &[Check] {
        &self.x_checks
    }

    pub fn data_position(&self, qubit: usize) -> (i32, i32) {
        let d = self.distance;
        ((qubit / d) as i32, (qubit % d) as i32)
    }

    /// Support of the logical Z operator: the data column on the logical boundary.
    pub fn logical_support(&self) -> Vec<usize> {
        (0..self.distance).map(|r| r * self.distance).collect()
    }

    /// Decoded-lattice position `(x1, x2)` of every Z check, in storage order.
    pub fn z_positions(&self) -> Vec<(i32, i32)> {
        self.z_checks
            .iter()
            .map(|ch| lattice_position(ch.row, ch.col, self.distance))
            .collect()
    }
}
