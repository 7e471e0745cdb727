use serde::{Deserialize, Serialize};

use crate::domain::{Domain, Point};
use crate::error::{Error, Result};
use crate::objective::Objective;

/// How a design point entered the experiment record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    Initial,
    Argmax,
    Resampled,
    LiarReplaced,
}

/// Append-only record of evaluated points and responses.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Design {
    domain: Domain,
    points: Vec<Point>,
    responses: Vec<f64>,
    origins: Vec<Origin>,
    #[serde(skip)]
    best: Option<usize>,
}

impl PartialEq for Design {
    fn eq(&self, other: &Self) -> bool {
        self.domain == other.domain
            && self.points == other.points
            && self.responses == other.responses
            && self.origins == other.origins
    }
}

impl Design {
    pub fn new(domain: Domain) -> Self {
        Design {
            domain,
            points: Vec::new(),
            responses: Vec::new(),
            origins: Vec::new(),
            best: None,
        }
    }

    /// Evaluates `points` with `objective` and records them as the initial design.
    pub fn evaluate(domain: &Domain, points: &[Point], objective: &Objective) -> Result<Self> {
        let mut design = Design::new(domain.clone());
        for p in points {
            domain.check(p)?;
            let y = objective.evaluate(p)?;
            design.push(p.clone(), y, Origin::Initial)?;
        }
        Ok(design)
    }

    /// Builds a design from already-known responses.
    pub fn from_data(domain: &Domain, points: Vec<Point>, responses: Vec<f64>) -> Result<Self> {
        if points.len() != responses.len() {
            return Err(Error::InvalidArgument(format!(
                "{} points but {} responses",
                points.len(),
                responses.len()
            )));
        }
        let mut design = Design::new(domain.clone());
        for (p, y) in points.into_iter().zip(responses) {
            design.push(p, y, Origin::Initial)?;
        }
        Ok(design)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }

    pub fn origins(&self) -> &[Origin] {
        &self.origins
    }

    /// Index of an existing point within the duplicate tolerance of `x`.
    pub fn find_duplicate(&self, x: &[f64]) -> Option<usize> {
        self.points.iter().position(|p| self.domain.is_duplicate(p, x))
    }

    pub fn push(&mut self, point: Point, response: f64, origin: Origin) -> Result<()> {
        self.domain.check(&point)?;
        if !response.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite response {response}")));
        }
        if let Some(existing) = self.find_duplicate(&point) {
            return Err(Error::DuplicatePoint { existing });
        }
        self.points.push(point);
        self.responses.push(response);
        self.origins.push(origin);
        let i = self.points.len() - 1;
        match self.best {
            Some(b) if self.responses[b] <= response => {}
            _ => self.best = Some(i),
        }
        Ok(())
    }

    fn best_index(&self) -> Option<usize> {
        // deserialized designs carry no cache
        self.best.or_else(|| {
            self.responses
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i)
        })
    }

    /// Smallest response and its point.
    pub fn best(&self) -> Option<(&Point, f64)> {
        self.best_index().map(|i| (&self.points[i], self.responses[i]))
    }

    pub fn best_value(&self) -> Option<f64> {
        self.best().map(|(_, y)| y)
    }

    /// Design points in unit-scaled coordinates.
    pub fn unit_points(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(|p| self.domain.to_unit(p)).collect()
    }
}
