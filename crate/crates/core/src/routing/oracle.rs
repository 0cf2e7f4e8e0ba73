use super::solver::{build_plan, extend, no_route, PathKey, Usage};
use super::{Arc, ModeExpandedGraph, RoutePlan, RouteRequest, RoutingError};

struct Search<'a> {
    xg: &'a ModeExpandedGraph,
    on_path: Vec<bool>,
    path: Vec<usize>,
    best: Option<(PathKey, Vec<usize>)>,
}

impl Search<'_> {
    fn visit(&mut self, state: super::StateKey, key: PathKey, usage: Usage) {
        if let Some((best, _)) = &self.best {
            if key.time_us > best.time_us {
                return;
            }
        }
        if state == self.xg.goal() {
            if self.best.as_ref().is_none_or(|(best, _)| key < *best) {
                self.best = Some((key, self.path.clone()));
            }
            return;
        }
        for &ix in self.xg.out_arcs(state) {
            let arc = &self.xg.arcs()[ix];
            if self.on_path[arc.to.index()] {
                continue;
            }
            let Some((next, used)) = extend(self.xg, &key, &usage, arc) else {
                continue;
            };
            self.on_path[arc.to.index()] = true;
            self.path.push(ix);
            self.visit(arc.to, next, used);
            self.path.pop();
            self.on_path[arc.to.index()] = false;
        }
    }
}

/// Exhaustive search over every simple path of the expanded graph.
///
/// Same objective, constraints and tie-break as [`super::solve_route`];
/// exponential, so meant for graphs of a dozen edges or so.
pub fn brute_force_oracle(request: &RouteRequest, xg: &ModeExpandedGraph) -> Result<RoutePlan, RoutingError> {
    let origin = xg.origin();
    let mut search = Search { xg, on_path: vec![false; xg.state_slots()], path: Vec::new(), best: None };
    search.on_path[origin.index()] = true;
    search.visit(origin, PathKey::origin(), Usage::default());
    let (_, path) = search.best.ok_or_else(|| no_route(request))?;
    let arcs: Vec<&Arc> = path.iter().map(|&ix| &xg.arcs()[ix]).collect();
    Ok(build_plan(xg, request, &arcs))
}
