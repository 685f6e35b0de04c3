//! Per-stage wall-clock accounting in the categories of the paper's
//! timing table.

use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Category {
    StreamSolve,
    Particles,
    Grid,
    LevelSet,
    RigidCoupling,
    RigidSolver,
    SurfaceTension,
    Other,
}

impl Category {
    pub const ALL: [Category; 8] = [
        Category::StreamSolve,
        Category::Particles,
        Category::Grid,
        Category::LevelSet,
        Category::RigidCoupling,
        Category::RigidSolver,
        Category::SurfaceTension,
        Category::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::StreamSolve => "stream solve",
            Category::Particles => "particles",
            Category::Grid => "grid",
            Category::LevelSet => "level set",
            Category::RigidCoupling => "rigid coupling",
            Category::RigidSolver => "rigid solver",
            Category::SurfaceTension => "surface tension",
            Category::Other => "other",
        }
    }

    /// Column-safe name for CSV headers.
    pub fn key(self) -> &'static str {
        match self {
            Category::StreamSolve => "stream_solve",
            Category::Particles => "particles",
            Category::Grid => "grid",
            Category::LevelSet => "level_set",
            Category::RigidCoupling => "rigid_coupling",
            Category::RigidSolver => "rigid_solver",
            Category::SurfaceTension => "surface_tension",
            Category::Other => "other",
        }
    }

    fn slot(self) -> usize {
        Category::ALL.iter().position(|&c| c == self).unwrap_or(7)
    }
}

/// Monotonic stopwatch. The browser build has no clock and reports zero.
#[derive(Clone, Copy, Debug)]
pub struct Stopwatch {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Stopwatch {
    pub fn start() -> Self {
        Stopwatch {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    pub fn seconds(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        return self.start.elapsed().as_secs_f64();
        #[cfg(target_arch = "wasm32")]
        0.0
    }
}

/// Accumulated seconds per category.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Timers {
    seconds: [f64; 8],
}

impl Timers {
    pub fn add(&mut self, cat: Category, secs: f64) {
        self.seconds[cat.slot()] += secs;
    }

    pub fn get(&self, cat: Category) -> f64 {
        self.seconds[cat.slot()]
    }

    pub fn total(&self) -> f64 {
        self.seconds.iter().sum()
    }

    pub fn merge(&mut self, other: &Timers) {
        for (a, b) in self.seconds.iter_mut().zip(other.seconds) {
            *a += b;
        }
    }

    pub fn report(&self) -> TimingReport {
        let total = self.total();
        let percent = self.seconds.map(|s| if total > 0.0 { 100.0 * s / total } else { 0.0 });
        TimingReport {
            seconds: self.seconds,
            percent,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimingReport {
    pub seconds: [f64; 8],
    pub percent: [f64; 8],
}

impl TimingReport {
    pub fn percent_of(&self, cat: Category) -> f64 {
        self.percent[cat.slot()]
    }
}

impl fmt::Display for TimingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<16} {:>10} {:>7}", "stage", "seconds", "%")?;
        for (i, cat) in Category::ALL.iter().enumerate() {
            writeln!(f, "{:<16} {:>10.3} {:>6.1}%", cat.name(), self.seconds[i], self.percent[i])?;
        }
        let total: f64 = self.seconds.iter().sum();
        write!(f, "{:<16} {:>10.3} {:>6.1}%", "total", total, self.percent.iter().sum::<f64>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentages_sum_to_hundred() {
        let mut t = Timers::default();
        t.add(Category::Grid, 0.3);
        t.add(Category::Particles, 0.2);
        t.add(Category::Other, 0.1);
        let r = t.report();
        assert!((r.percent.iter().sum::<f64>() - 100.0).abs() < 1e-9);
        assert!((r.percent_of(Category::Grid) - 50.0).abs() < 1e-9);
        assert_eq!(Timers::default().report().percent, [0.0; 8]);
        assert!(r.to_string().contains("surface tension"));
    }
}
