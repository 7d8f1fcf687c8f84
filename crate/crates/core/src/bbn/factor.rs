//! Variable elimination over the ancestral subgraph of the target and evidence.

use super::network::BayesNetwork;

/// A table over `vars` (ascending node indices), row-major with the last
/// variable varying fastest.
#[derive(Debug, Clone)]
struct Factor {
    vars: Vec<usize>,
    cards: Vec<usize>,
    values: Vec<f64>,
}

impl Factor {
    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![0; self.vars.len()];
        let mut s = 1;
        for k in (0..self.vars.len()).rev() {
            strides[k] = s;
            s *= self.cards[k];
        }
        strides
    }

    /// Stride of each variable of `scope` within `self` (0 when absent).
    fn strides_in(&self, scope: &[usize]) -> Vec<usize> {
        let own = self.strides();
        scope.iter().map(|v| self.vars.iter().position(|x| x == v).map_or(0, |k| own[k])).collect()
    }

    fn product(&self, other: &Factor) -> Factor {
        let mut vars: Vec<usize> = self.vars.iter().chain(&other.vars).copied().collect();
        vars.sort_unstable();
        vars.dedup();
        let cards: Vec<usize> = vars
            .iter()
            .map(|v| {
                let k = self.vars.iter().position(|x| x == v);
                k.map_or_else(|| other.cards[other.vars.iter().position(|x| x == v).unwrap()], |k| self.cards[k])
            })
            .collect();
        let size: usize = cards.iter().product();
        let sa = self.strides_in(&vars);
        let sb = other.strides_in(&vars);

        let mut values = Vec::with_capacity(size);
        let mut digits = vec![0usize; vars.len()];
        let (mut ia, mut ib) = (0usize, 0usize);
        for _ in 0..size {
            values.push(self.values[ia] * other.values[ib]);
            // odometer, last digit fastest
            for k in (0..vars.len()).rev() {
                digits[k] += 1;
                ia += sa[k];
                ib += sb[k];
                if digits[k] < cards[k] {
                    break;
                }
                ia -= sa[k] * cards[k];
                ib -= sb[k] * cards[k];
                digits[k] = 0;
            }
        }
        Factor { vars, cards, values }
    }

    fn sum_out(&self, var: usize) -> Factor {
        let Some(pos) = self.vars.iter().position(|&v| v == var) else {
            return self.clone();
        };
        let mut vars = self.vars.clone();
        let mut cards = self.cards.clone();
        vars.remove(pos);
        cards.remove(pos);
        let out_len: usize = cards.iter().product();
        let mut out = Factor { vars, cards, values: vec![0.0; out_len] };
        let so = out.strides_in(&self.vars);

        let mut digits = vec![0usize; self.vars.len()];
        let mut io = 0usize;
        for &v in &self.values {
            out.values[io] += v;
            for k in (0..self.vars.len()).rev() {
                digits[k] += 1;
                io += so[k];
                if digits[k] < self.cards[k] {
                    break;
                }
                io -= so[k] * self.cards[k];
                digits[k] = 0;
            }
        }
        out
    }
}

/// CPT of `node` as a factor over its unobserved family members.
fn cpt_factor(net: &BayesNetwork, node: usize, observed: &[Option<usize>]) -> Factor {
    let layout = &net.layout;
    let cpt = net.cpt_at(node);
    let mut family: Vec<usize> = layout.parents[node].clone();
    family.push(node);
    family.sort_unstable();
    let vars: Vec<usize> = family.iter().copied().filter(|&v| observed[v].is_none()).collect();
    let cards: Vec<usize> = vars.iter().map(|&v| layout.card(v)).collect();
    let size: usize = cards.iter().product();

    let mut assignment: Vec<usize> = observed.iter().map(|o| o.unwrap_or(0)).collect();
    let mut values = Vec::with_capacity(size);
    let mut digits = vec![0usize; vars.len()];
    for _ in 0..size {
        for (k, &v) in vars.iter().enumerate() {
            assignment[v] = digits[k];
        }
        let row = layout.row_of(node, |p| assignment[p]);
        values.push(cpt.probability(row, assignment[node]));
        for k in (0..vars.len()).rev() {
            digits[k] += 1;
            if digits[k] < cards[k] {
                break;
            }
            digits[k] = 0;
        }
    }
    Factor { vars, cards, values }
}

/// Ancestral closure of the target and all observed nodes. Everything else
/// is barren and sums to one.
fn relevant_nodes(net: &BayesNetwork, target: usize, observed: &[Option<usize>]) -> Vec<bool> {
    let layout = &net.layout;
    let mut keep = vec![false; layout.names.len()];
    let mut stack: Vec<usize> = std::iter::once(target).chain((0..keep.len()).filter(|&i| observed[i].is_some())).collect();
    while let Some(i) = stack.pop() {
        if !keep[i] {
            keep[i] = true;
            stack.extend(layout.parents[i].iter().copied());
        }
    }
    keep
}

/// Normalised posterior over the states of `target` (which must be unobserved).
pub(crate) fn posterior(net: &BayesNetwork, target: usize, observed: &[Option<usize>]) -> Vec<f64> {
    let layout = &net.layout;
    let keep = relevant_nodes(net, target, observed);
    let mut factors: Vec<Factor> =
        (0..keep.len()).filter(|&i| keep[i]).map(|i| cpt_factor(net, i, observed)).collect();

    let mut hidden: Vec<usize> =
        (0..keep.len()).filter(|&i| keep[i] && i != target && observed[i].is_none()).collect();

    while !hidden.is_empty() {
        // Greedy min-size order; ties go to the lowest index for determinism.
        let (slot, var) = hidden
            .iter()
            .enumerate()
            .map(|(slot, &v)| {
                let mut scope: Vec<usize> =
                    factors.iter().filter(|f| f.vars.contains(&v)).flat_map(|f| f.vars.iter().copied()).collect();
                scope.sort_unstable();
                scope.dedup();
                let size: usize = scope.iter().map(|&u| layout.card(u)).product();
                (size, slot, v)
            })
            .min_by_key(|&(size, _, v)| (size, v))
            .map(|(_, slot, v)| (slot, v))
            .expect("hidden is non-empty");
        hidden.swap_remove(slot);

        let (touching, rest): (Vec<Factor>, Vec<Factor>) = factors.into_iter().partition(|f| f.vars.contains(&var));
        factors = rest;
        if let Some(joined) = touching.into_iter().reduce(|a, b| a.product(&b)) {
            factors.push(joined.sum_out(var));
        }
    }

    let joint = factors
        .into_iter()
        .reduce(|a, b| a.product(&b))
        .expect("target factor always present");
    debug_assert_eq!(joint.vars, vec![target]);
    let z: f64 = joint.values.iter().sum();
    joint.values.iter().map(|v| v / z).collect()
}
