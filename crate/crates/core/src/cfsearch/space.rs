use std::cmp::Ordering;

use super::{Direction, ResolvedQuery};
use crate::data::{Instance, Value};
use crate::model::{sigmoid, Class, ConfidenceMeasure, LogisticModel};

/// One admissible replacement value for a feature.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Cand {
    pub grid: usize,
    pub value: Value,
    pub contribution: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Point {
    pub logit: f64,
    pub probability: f64,
    pub confidence: f64,
    pub class: Class,
    pub distance: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Evaluated {
    /// `(schema index, replacement)`, ascending by schema index.
    pub changes: Vec<(usize, Cand)>,
    pub point: Point,
    pub objective: f64,
}

pub(crate) struct Search {
    pub best: Option<Evaluated>,
    pub points: u64,
    pub threshold_hits: u64,
}

/// The grid around one factual instance. Every point is evaluated through
/// [`SearchSpace::evaluate`], which reproduces `LogisticModel::logit` and
/// `MadWeights::distance` bit for bit.
pub(crate) struct SearchSpace<'a> {
    pub model: &'a LogisticModel,
    pub x: &'a Instance,
    pub factual: Vec<Value>,
    base: Vec<f64>,
    /// Searchable schema indices, ascending.
    pub features: Vec<usize>,
    /// Candidates per entry of `features`, sorted by (cost, grid index).
    pub candidates: Vec<Vec<Cand>>,
    pub threshold: f64,
    pub epsilon: f64,
    pub direction: Direction,
    pub measure: ConfidenceMeasure,
    pub factual_class: Class,
}

impl<'a> SearchSpace<'a> {
    pub fn new(model: &'a LogisticModel, x: &'a Instance, rq: &ResolvedQuery) -> Self {
        Self::with_features(model, x, &rq.mutable, rq.threshold, rq.epsilon, rq.direction, rq.measure)
    }

    pub fn with_features(
        model: &'a LogisticModel,
        x: &'a Instance,
        mutable: &[usize],
        threshold: f64,
        epsilon: f64,
        direction: Direction,
        measure: ConfidenceMeasure,
    ) -> Self {
        let schema = &model.schema;
        let factual: Vec<Value> = schema.ordered(x).into_iter().cloned().collect();
        let base: Vec<f64> = factual
            .iter()
            .enumerate()
            .map(|(j, v)| model.contribution(j, v))
            .collect();
        let features: Vec<usize> = mutable
            .iter()
            .copied()
            .filter(|&j| model.mad_weights.is_searchable(&schema.features[j].name))
            .collect();
        let mut space = SearchSpace {
            model,
            x,
            factual,
            base,
            features: features.clone(),
            candidates: Vec::new(),
            threshold,
            epsilon,
            direction,
            measure,
            factual_class: Class::Negative,
        };
        space.candidates = features
            .iter()
            .map(|&j| {
                let mut c: Vec<Cand> = space.grid_candidates(j).collect();
                c.sort_by(|a, b| a.cost.total_cmp(&b.cost).then(a.grid.cmp(&b.grid)));
                c
            })
            .collect();
        space.factual_class = space.evaluate(&[]).class;
        space
    }

    /// Grid index of the factual value of feature `j`, if it is on the grid.
    pub fn factual_grid(&self, j: usize) -> Option<usize> {
        self.model.schema.features[j].grid_index(&self.factual[j])
    }

    /// Every grid value of feature `j` other than the factual one.
    pub fn grid_candidates(&self, j: usize) -> impl Iterator<Item = Cand> + '_ {
        let skip = self.factual_grid(j);
        (0..self.model.schema.features[j].grid_len())
            .filter(move |&g| Some(g) != skip)
            .map(move |g| self.make_cand(j, g))
    }

    pub fn make_cand(&self, j: usize, grid: usize) -> Cand {
        let f = &self.model.schema.features[j];
        let value = f.grid_value(grid);
        Cand {
            grid,
            contribution: self.model.contribution(j, &value),
            cost: self.model.mad_weights.change_cost(&f.name, &self.factual[j], &value),
            value,
        }
    }

    pub fn evaluate(&self, changes: &[(usize, Cand)]) -> Point {
        self.evaluate_iter(changes.iter().map(|(j, c)| (*j, c)))
    }

    /// `changes` must be ascending by schema index.
    pub fn evaluate_iter<'c, I>(&self, changes: I) -> Point
    where
        I: Iterator<Item = (usize, &'c Cand)> + Clone,
    {
        let mut pending = changes.clone().peekable();
        let logit = self.model.logit_from_contributions((0..self.base.len()).map(|j| {
            match pending.peek() {
                Some(&(cj, c)) if cj == j => {
                    pending.next();
                    c.contribution
                }
                _ => self.base[j],
            }
        }));
        let distance = changes.fold(0.0, |acc, (_, c)| acc + c.cost);
        let probability = sigmoid(logit);
        Point {
            logit,
            probability,
            confidence: self.measure.score(probability),
            class: self.model.class_of(probability),
            distance,
        }
    }

    pub fn threshold_ok(&self, p: &Point) -> bool {
        match self.direction {
            Direction::Increase => p.confidence >= self.threshold + self.epsilon,
            Direction::Decrease => p.confidence <= self.threshold - self.epsilon,
        }
    }

    /// Objective of the confidence query, or `None` when the point violates
    /// the threshold or class constraint.
    pub fn confidence_objective_of(&self, p: &Point) -> Option<f64> {
        (p.class == self.factual_class && self.threshold_ok(p))
            .then(|| p.distance + (p.confidence - self.threshold).abs())
    }

    pub fn confidence_objective(&self, p: Point, changes: Vec<(usize, Cand)>) -> Option<Evaluated> {
        self.confidence_objective_of(&p).map(|objective| Evaluated {
            changes,
            point: p,
            objective,
        })
    }

    /// Total order used to pick among points: objective, then fewer changes,
    /// then the sorted changed-name list, then grid positions.
    pub fn compare<'c, A, B>(&self, a_obj: f64, a: A, b_obj: f64, b: B) -> Ordering
    where
        A: Iterator<Item = (usize, &'c Cand)>,
        B: Iterator<Item = (usize, &'c Cand)>,
    {
        a_obj.total_cmp(&b_obj).then_with(|| {
            let ka = self.tie_key(a);
            let kb = self.tie_key(b);
            ka.0.len()
                .cmp(&kb.0.len())
                .then_with(|| ka.0.cmp(&kb.0))
                .then_with(|| ka.1.cmp(&kb.1))
        })
    }

    fn tie_key<'c>(&self, changes: impl Iterator<Item = (usize, &'c Cand)>) -> (Vec<&str>, Vec<usize>) {
        let mut pairs: Vec<(&str, usize)> = changes
            .map(|(j, c)| (self.model.schema.features[j].name.as_str(), c.grid))
            .collect();
        pairs.sort();
        pairs.into_iter().unzip()
    }

    pub fn instance_for(&self, changes: &[(usize, Cand)]) -> Instance {
        let mut x = self.x.clone();
        for (j, c) in changes {
            x.set(&self.model.schema.features[*j].name, c.value.clone());
        }
        x
    }

    /// Depth-first branch and bound over feature subsets of size `<= k`.
    ///
    /// `objective` returns `None` for infeasible points and must be at least
    /// the point's distance, which makes the accumulated change cost a valid
    /// lower bound for every extension of the current subset.
    pub fn branch_and_bound<F>(&self, k: usize, seeds: &[Vec<(usize, Cand)>], objective: F) -> Search
    where
        F: Fn(&Point) -> Option<f64>,
    {
        let mut state = Search {
            best: None,
            points: 0,
            threshold_hits: 0,
        };
        let mut consider = |state: &mut Search, changes: &[(usize, Cand)]| {
            let p = self.evaluate(changes);
            state.points += 1;
            if self.threshold_ok(&p) {
                state.threshold_hits += 1;
            }
            if let Some(obj) = objective(&p) {
                let replace = match &state.best {
                    None => true,
                    Some(best) => {
                        self.compare(
                            obj,
                            changes.iter().map(|(j, c)| (*j, c)),
                            best.objective,
                            best.changes.iter().map(|(j, c)| (*j, c)),
                        ) == Ordering::Less
                    }
                };
                if replace {
                    state.best = Some(Evaluated {
                        changes: changes.to_vec(),
                        point: p,
                        objective: obj,
                    });
                }
            }
        };

        for seed in seeds.iter().filter(|s| s.len() <= k) {
            consider(&mut state, seed);
        }
        consider(&mut state, &[]);
        let mut stack = Vec::with_capacity(k);
        self.descend(0, k, 0.0, &mut stack, &mut state, &mut consider);
        state
    }

    fn descend<C>(
        &self,
        start: usize,
        budget: usize,
        partial: f64,
        stack: &mut Vec<(usize, Cand)>,
        state: &mut Search,
        consider: &mut C,
    ) where
        C: FnMut(&mut Search, &[(usize, Cand)]),
    {
        if budget == 0 {
            return;
        }
        for pos in start..self.features.len() {
            let j = self.features[pos];
            for cand in &self.candidates[pos] {
                let cost = partial + cand.cost;
                if let Some(best) = &state.best {
                    if cost > best.objective {
                        break;
                    }
                }
                stack.push((j, cand.clone()));
                consider(state, stack);
                self.descend(pos + 1, budget - 1, cost, stack, state, consider);
                stack.pop();
            }
        }
    }
}
