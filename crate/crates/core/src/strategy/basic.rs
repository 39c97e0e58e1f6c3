use std::sync::Arc;

use rand::Rng;

use super::{
    check_distribution, hash_key, one_hot, InformedCursor, InformedStrategy, MemoryKey,
    UninformedCursor, UninformedStrategy,
};
use crate::error::{Error, Result};
use crate::game::{Action, Pair, DUMMY};

/// History-independent Player I strategy, one mixed action per state.
#[derive(Debug, Clone)]
pub struct StationaryInformed {
    per_state: Arc<Vec<Vec<f64>>>,
}

/// History-independent mixed action.
#[derive(Debug, Clone)]
pub struct StationaryUninformed {
    dist: Arc<Vec<f64>>,
}

pub fn stationary_informed(per_state: Vec<Vec<f64>>) -> Result<Arc<StationaryInformed>> {
    let n = per_state.first().map_or(0, Vec::len);
    if per_state.is_empty() || n == 0 {
        return Err(Error::InvalidParameter("empty stationary strategy".into()));
    }
    for d in &per_state {
        check_distribution(d, n)?;
    }
    Ok(Arc::new(StationaryInformed {
        per_state: Arc::new(per_state),
    }))
}

pub fn stationary_uninformed(dist: Vec<f64>) -> Result<Arc<StationaryUninformed>> {
    check_distribution(&dist, dist.len())?;
    if dist.is_empty() {
        return Err(Error::InvalidParameter("empty stationary strategy".into()));
    }
    Ok(Arc::new(StationaryUninformed { dist: Arc::new(dist) }))
}

/// Plays `actions[k]` in state `k` at every stage.
pub fn pure_informed(num_actions: usize, actions: &[Action]) -> Result<Arc<StationaryInformed>> {
    if actions.iter().any(|&a| a >= num_actions) {
        return Err(Error::InvalidParameter(format!("{actions:?} exceeds {num_actions} actions")));
    }
    stationary_informed(actions.iter().map(|&a| one_hot(num_actions, a)).collect())
}

/// Plays `action` at every stage.
pub fn pure_uninformed(num_actions: usize, action: Action) -> Result<Arc<StationaryUninformed>> {
    if action >= num_actions {
        return Err(Error::InvalidParameter(format!("action {action} of {num_actions}")));
    }
    stationary_uninformed(one_hot(num_actions, action))
}

impl InformedStrategy for StationaryInformed {
    fn num_states(&self) -> usize {
        self.per_state.len()
    }
    fn num_actions(&self) -> usize {
        self.per_state[0].len()
    }
    fn start(&self) -> Box<dyn InformedCursor> {
        Box::new(self.clone())
    }
}

impl InformedCursor for StationaryInformed {
    fn dist(&self, state: usize) -> &[f64] {
        &self.per_state[state]
    }
    fn advance(&mut self, _pair: Pair) {}
    fn memory_key(&self) -> Option<MemoryKey> {
        Some(0)
    }
    fn boxed_clone(&self) -> Box<dyn InformedCursor> {
        Box::new(self.clone())
    }
}

impl UninformedStrategy for StationaryUninformed {
    fn num_actions(&self) -> usize {
        self.dist.len()
    }
    fn start(&self) -> Box<dyn UninformedCursor> {
        Box::new(self.clone())
    }
}

impl UninformedCursor for StationaryUninformed {
    fn dist(&self) -> &[f64] {
        &self.dist
    }
    fn advance(&mut self, _pair: Pair) {}
    fn memory_key(&self) -> Option<MemoryKey> {
        Some(0)
    }
    fn boxed_clone(&self) -> Box<dyn UninformedCursor> {
        Box::new(self.clone())
    }
}

/// Player I ignores the state and follows a public-history strategy.
#[derive(Clone)]
pub struct NonRevealing {
    inner: Arc<dyn UninformedStrategy>,
    num_states: usize,
}

pub fn non_revealing(inner: Arc<dyn UninformedStrategy>, num_states: usize) -> Arc<NonRevealing> {
    Arc::new(NonRevealing { inner, num_states })
}

struct NonRevealingCursor(Box<dyn UninformedCursor>);

impl InformedStrategy for NonRevealing {
    fn num_states(&self) -> usize {
        self.num_states
    }
    fn num_actions(&self) -> usize {
        self.inner.num_actions()
    }
    fn start(&self) -> Box<dyn InformedCursor> {
        Box::new(NonRevealingCursor(self.inner.start()))
    }
}

impl InformedCursor for NonRevealingCursor {
    fn dist(&self, _state: usize) -> &[f64] {
        self.0.dist()
    }
    fn advance(&mut self, pair: Pair) {
        self.0.advance(pair);
    }
    fn memory_key(&self) -> Option<MemoryKey> {
        self.0.memory_key()
    }
    fn boxed_clone(&self) -> Box<dyn InformedCursor> {
        Box::new(NonRevealingCursor(self.0.boxed_clone()))
    }
}

/// Deterministic transition structure of a finite-memory strategy: the
/// memory moves on every observed pair, including dummy coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Machine {
    initial: usize,
    num_i: usize,
    num_j: usize,
    /// `transitions[m][pair_index]`.
    transitions: Vec<Vec<usize>>,
}

impl Machine {
    /// `transitions[m]` lists the successor of memory `m` for every pair in
    /// [`Machine::pair_index`] order, so each row has `(|I|+1)(|J|+1)` entries.
    pub fn new(initial: usize, num_i: usize, num_j: usize, transitions: Vec<Vec<usize>>) -> Result<Self> {
        let states = transitions.len();
        let width = (num_i + 1) * (num_j + 1);
        if initial >= states {
            return Err(Error::InvalidParameter("initial memory out of range".into()));
        }
        if transitions.iter().any(|row| row.len() != width || row.iter().any(|&m| m >= states)) {
            return Err(Error::InvalidParameter(format!(
                "each transition row needs {width} successors below {states}"
            )));
        }
        Ok(Machine {
            initial,
            num_i,
            num_j,
            transitions,
        })
    }

    /// A machine that stays in memory 0 forever.
    pub fn trivial(num_i: usize, num_j: usize) -> Self {
        Machine {
            initial: 0,
            num_i,
            num_j,
            transitions: vec![vec![0; (num_i + 1) * (num_j + 1)]],
        }
    }

    /// Uniformly random transitions from memory 0.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, memory_states: usize, num_i: usize, num_j: usize) -> Self {
        let width = (num_i + 1) * (num_j + 1);
        let transitions = (0..memory_states)
            .map(|_| (0..width).map(|_| rng.gen_range(0..memory_states)).collect())
            .collect();
        Machine {
            initial: 0,
            num_i,
            num_j,
            transitions,
        }
    }

    pub fn memory_states(&self) -> usize {
        self.transitions.len()
    }

    /// Column of `pair` in a transition row; the dummy maps to the last index.
    pub fn pair_index(&self, pair: Pair) -> usize {
        let i = if pair.i == DUMMY { self.num_i } else { pair.i };
        let j = if pair.j == DUMMY { self.num_j } else { pair.j };
        i * (self.num_j + 1) + j
    }

    pub fn next(&self, memory: usize, pair: Pair) -> usize {
        self.transitions[memory][self.pair_index(pair)]
    }
}

fn random_distribution<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / sum).collect()
}

/// Finite-memory Player I strategy with an output per (state, memory).
#[derive(Debug, Clone)]
pub struct InformedMachine {
    machine: Arc<Machine>,
    /// `outputs[k][m]`.
    outputs: Arc<Vec<Vec<Vec<f64>>>>,
}

impl InformedMachine {
    pub fn new(machine: Machine, outputs: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if outputs.is_empty() {
            return Err(Error::InvalidParameter("machine without states".into()));
        }
        for per_memory in &outputs {
            if per_memory.len() != machine.memory_states() {
                return Err(Error::InvalidParameter("one output per memory state".into()));
            }
            for d in per_memory {
                check_distribution(d, machine.num_i)?;
            }
        }
        Ok(InformedMachine {
            machine: Arc::new(machine),
            outputs: Arc::new(outputs),
        })
    }

    /// Random fully mixed outputs on a given machine.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, num_states: usize, machine: Machine) -> Self {
        let outputs = (0..num_states)
            .map(|_| {
                (0..machine.memory_states())
                    .map(|_| random_distribution(rng, machine.num_i))
                    .collect()
            })
            .collect();
        InformedMachine {
            machine: Arc::new(machine),
            outputs: Arc::new(outputs),
        }
    }
}

#[derive(Clone)]
struct InformedMachineCursor {
    strategy: InformedMachine,
    memory: usize,
}

impl InformedStrategy for InformedMachine {
    fn num_states(&self) -> usize {
        self.outputs.len()
    }
    fn num_actions(&self) -> usize {
        self.machine.num_i
    }
    fn start(&self) -> Box<dyn InformedCursor> {
        Box::new(InformedMachineCursor {
            strategy: self.clone(),
            memory: self.machine.initial,
        })
    }
}

impl InformedCursor for InformedMachineCursor {
    fn dist(&self, state: usize) -> &[f64] {
        &self.strategy.outputs[state][self.memory]
    }
    fn advance(&mut self, pair: Pair) {
        self.memory = self.strategy.machine.next(self.memory, pair);
    }
    fn memory_key(&self) -> Option<MemoryKey> {
        Some(hash_key(&self.memory))
    }
    fn boxed_clone(&self) -> Box<dyn InformedCursor> {
        Box::new(self.clone())
    }
}

/// Finite-memory public-history strategy with an output per memory state.
#[derive(Debug, Clone)]
pub struct UninformedMachine {
    machine: Arc<Machine>,
    outputs: Arc<Vec<Vec<f64>>>,
    num_actions: usize,
}

impl UninformedMachine {
    pub fn new(machine: Machine, outputs: Vec<Vec<f64>>) -> Result<Self> {
        if outputs.len() != machine.memory_states() {
            return Err(Error::InvalidParameter("one output per memory state".into()));
        }
        let n = outputs[0].len();
        for d in &outputs {
            check_distribution(d, n)?;
        }
        Ok(UninformedMachine {
            machine: Arc::new(machine),
            outputs: Arc::new(outputs),
            num_actions: n,
        })
    }

    /// Random outputs over `num_actions` actions on a given machine; each
    /// memory state is pure with probability `pure_fraction`, else fully mixed.
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        machine: Machine,
        num_actions: usize,
        pure_fraction: f64,
    ) -> Self {
        let outputs = (0..machine.memory_states())
            .map(|_| {
                if rng.gen_bool(pure_fraction) {
                    one_hot(num_actions, rng.gen_range(0..num_actions))
                } else {
                    random_distribution(rng, num_actions)
                }
            })
            .collect();
        UninformedMachine {
            machine: Arc::new(machine),
            outputs: Arc::new(outputs),
            num_actions,
        }
    }

    /// Plays `first` for `count` of its own moves, then `then` forever. The
    /// machine counts stages where the j-coordinate is not the dummy.
    pub fn switch_after(num_i: usize, num_j: usize, first: Action, count: usize, then: Action) -> Result<Self> {
        let width = (num_i + 1) * (num_j + 1);
        let transitions = (0..=count)
            .map(|m| {
                (0..width)
                    .map(|col| {
                        let j_is_dummy = col % (num_j + 1) == num_j;
                        if j_is_dummy || m == count { m } else { m + 1 }
                    })
                    .collect()
            })
            .collect();
        let mut outputs = vec![one_hot(num_j, first); count];
        outputs.push(one_hot(num_j, then));
        UninformedMachine::new(Machine::new(0, num_i, num_j, transitions)?, outputs)
    }

    /// Cycles through `actions` on its own moves.
    pub fn periodic(num_i: usize, num_j: usize, actions: &[Action]) -> Result<Self> {
        let n = actions.len();
        if n == 0 {
            return Err(Error::InvalidParameter("empty period".into()));
        }
        let width = (num_i + 1) * (num_j + 1);
        let transitions = (0..n)
            .map(|m| {
                (0..width)
                    .map(|col| if col % (num_j + 1) == num_j { m } else { (m + 1) % n })
                    .collect()
            })
            .collect();
        let outputs = actions.iter().map(|&a| one_hot(num_j, a)).collect();
        UninformedMachine::new(Machine::new(0, num_i, num_j, transitions)?, outputs)
    }
}

#[derive(Clone)]
struct UninformedMachineCursor {
    strategy: UninformedMachine,
    memory: usize,
}

impl UninformedStrategy for UninformedMachine {
    fn num_actions(&self) -> usize {
        self.num_actions
    }
    fn start(&self) -> Box<dyn UninformedCursor> {
        Box::new(UninformedMachineCursor {
            strategy: self.clone(),
            memory: self.machine.initial,
        })
    }
}

impl UninformedCursor for UninformedMachineCursor {
    fn dist(&self) -> &[f64] {
        &self.strategy.outputs[self.memory]
    }
    fn advance(&mut self, pair: Pair) {
        self.memory = self.strategy.machine.next(self.memory, pair);
    }
    fn memory_key(&self) -> Option<MemoryKey> {
        Some(hash_key(&self.memory))
    }
    fn boxed_clone(&self) -> Box<dyn UninformedCursor> {
        Box::new(self.clone())
    }
}
