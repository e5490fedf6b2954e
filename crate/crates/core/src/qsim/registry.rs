use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;

use super::state::renormalize;
use super::{BellOutcome, ParticleHandle, PauliLabel, QState, QsimError, MAX_QUBITS};

#[derive(Clone, Debug)]
struct Cluster {
    state: QState,
    /// `owners[q]` is the particle stored at qubit `q` of `state`.
    owners: Vec<ParticleHandle>,
}

#[derive(Clone, Copy, Debug)]
struct Binding {
    cluster: usize,
    qubit: usize,
}

/// Tracks which particles share a joint state.
///
/// Distinct clusters are always in a product state with each other. Joint
/// operations merge clusters first; measurements split the measured
/// particles back out, so clusters stay within [`MAX_QUBITS`].
#[derive(Clone, Debug, Default)]
pub struct Registry {
    clusters: Vec<Option<Cluster>>,
    free: Vec<usize>,
    bindings: Vec<Binding>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of particles created so far. Handles are never retired.
    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn contains(&self, handle: ParticleHandle) -> bool {
        handle.index() < self.bindings.len()
    }

    /// Registers `state` and returns one fresh handle per qubit.
    pub fn insert(&mut self, state: QState) -> Vec<ParticleHandle> {
        let n = state.num_qubits();
        let first = self.bindings.len() as u32;
        let owners: Vec<ParticleHandle> = (first..first + n as u32).map(ParticleHandle).collect();
        let cluster = self.store(Cluster {
            state,
            owners: owners.clone(),
        });
        for qubit in 0..n {
            self.bindings.push(Binding { cluster, qubit });
        }
        owners
    }

    /// A single particle in `|0⟩`.
    pub fn fresh_qubit(&mut self) -> ParticleHandle {
        let state = QState::basis(1, 0).expect("one qubit fits the budget");
        self.insert(state)[0]
    }

    /// A new singlet `(|01⟩ − |10⟩)/√2` as `(first, second)`.
    pub fn make_epr(&mut self) -> (ParticleHandle, ParticleHandle) {
        self.prepare_bell(BellOutcome::PsiMinus)
    }

    pub fn prepare_bell(&mut self, outcome: BellOutcome) -> (ParticleHandle, ParticleHandle) {
        let h = self.insert(QState::bell(outcome));
        (h[0], h[1])
    }

    fn store(&mut self, cluster: Cluster) -> usize {
        match self.free.pop() {
            Some(slot) => {
                self.clusters[slot] = Some(cluster);
                slot
            }
            None => {
                self.clusters.push(Some(cluster));
                self.clusters.len() - 1
            }
        }
    }

    fn binding(&self, handle: ParticleHandle) -> Result<Binding, QsimError> {
        self.bindings
            .get(handle.index())
            .copied()
            .ok_or(QsimError::UnknownHandle(handle))
    }

    fn cluster(&self, id: usize) -> &Cluster {
        self.clusters[id].as_ref().expect("bound cluster is live")
    }

    fn cluster_mut(&mut self, id: usize) -> &mut Cluster {
        self.clusters[id].as_mut().expect("bound cluster is live")
    }

    /// Joint state holding `handle`, with the particles in qubit order.
    pub fn state_of(
        &self,
        handle: ParticleHandle,
    ) -> Result<(&QState, &[ParticleHandle]), QsimError> {
        let b = self.binding(handle)?;
        let c = self.cluster(b.cluster);
        Ok((&c.state, &c.owners))
    }

    /// True when both particles currently live in one joint state.
    pub fn are_joint(&self, a: ParticleHandle, b: ParticleHandle) -> Result<bool, QsimError> {
        Ok(self.binding(a)?.cluster == self.binding(b)?.cluster)
    }

    pub fn apply_pauli(&mut self, handle: ParticleHandle, op: PauliLabel) -> Result<(), QsimError> {
        let b = self.binding(handle)?;
        self.cluster_mut(b.cluster).state.apply_pauli(b.qubit, op);
        Ok(())
    }

    pub fn apply_cnot(
        &mut self,
        control: ParticleHandle,
        target: ParticleHandle,
    ) -> Result<(), QsimError> {
        if control == target {
            return Err(QsimError::SameParticle(control));
        }
        let cluster = self.join(control, target)?;
        let (cq, tq) = (self.binding(control)?.qubit, self.binding(target)?.qubit);
        self.cluster_mut(cluster).state.apply_cnot(cq, tq);
        Ok(())
    }

    /// Merges the clusters of `a` and `b` (if distinct) and returns the id
    /// of the joint cluster.
    fn join(&mut self, a: ParticleHandle, b: ParticleHandle) -> Result<usize, QsimError> {
        let ca = self.binding(a)?.cluster;
        let cb = self.binding(b)?.cluster;
        if ca == cb {
            return Ok(ca);
        }
        let requested = self.cluster(ca).owners.len() + self.cluster(cb).owners.len();
        if requested > MAX_QUBITS {
            return Err(QsimError::QubitBudget { requested });
        }
        let first = self.clusters[ca].take().expect("live cluster");
        let second = self.clusters[cb].take().expect("live cluster");
        self.free.push(ca);
        self.free.push(cb);
        let state = first.state.tensor(&second.state)?;
        let mut owners = first.owners;
        owners.extend(second.owners);
        Ok(self.rebind(Cluster { state, owners }))
    }

    fn rebind(&mut self, cluster: Cluster) -> usize {
        let owners = cluster.owners.clone();
        let id = self.store(cluster);
        for (qubit, h) in owners.into_iter().enumerate() {
            self.bindings[h.index()] = Binding { cluster: id, qubit };
        }
        id
    }

    /// Z-basis measurement. The measured particle is left alone in `|bit⟩`.
    pub fn z_measure<R: Rng + ?Sized>(
        &mut self,
        handle: ParticleHandle,
        rng: &mut R,
    ) -> Result<u8, QsimError> {
        let b = self.binding(handle)?;
        let p1 = self.cluster(b.cluster).state.prob_one(b.qubit);
        let bit = sample(&[1.0 - p1, p1], rng) as u8;
        let ket = QState::basis(1, bit as usize)?;
        self.project(b.cluster, &[b.qubit], ket);
        Ok(bit)
    }

    /// Bell-basis measurement of `(a, b)`. The pair is left in the measured
    /// Bell state, disentangled from everything else.
    pub fn bell_measure<R: Rng + ?Sized>(
        &mut self,
        a: ParticleHandle,
        b: ParticleHandle,
        rng: &mut R,
    ) -> Result<BellOutcome, QsimError> {
        if a == b {
            return Err(QsimError::SameParticle(a));
        }
        let cluster = self.join(a, b)?;
        let (qa, qb) = (self.binding(a)?.qubit, self.binding(b)?.qubit);
        let probs = self.cluster(cluster).state.bell_probabilities(qa, qb);
        let outcome = BellOutcome::ALL[sample(&probs, rng)];
        self.project(cluster, &[qa, qb], QState::bell(outcome));
        Ok(outcome)
    }

    /// Born probabilities of a Bell measurement on `(a, b)` without
    /// disturbing the state.
    pub fn bell_probabilities(
        &self,
        a: ParticleHandle,
        b: ParticleHandle,
    ) -> Result<[f64; 4], QsimError> {
        if a == b {
            return Err(QsimError::SameParticle(a));
        }
        let (ba, bb) = (self.binding(a)?, self.binding(b)?);
        if ba.cluster == bb.cluster {
            return Ok(self
                .cluster(ba.cluster)
                .state
                .bell_probabilities(ba.qubit, bb.qubit));
        }
        let first = &self.cluster(ba.cluster).state;
        let joint = first.tensor(&self.cluster(bb.cluster).state)?;
        Ok(joint.bell_probabilities(ba.qubit, first.num_qubits() + bb.qubit))
    }

    /// Collapses `targets` of cluster `id` onto `ket` and splits them into a
    /// cluster of their own.
    fn project(&mut self, id: usize, targets: &[usize], ket: QState) {
        let cluster = self.clusters[id].take().expect("live cluster");
        self.free.push(id);
        let mut residual = cluster.state.contract(targets, ket.amplitudes());
        let measured: Vec<ParticleHandle> = targets.iter().map(|&q| cluster.owners[q]).collect();
        let rest: Vec<ParticleHandle> = (0..cluster.owners.len())
            .filter(|q| !targets.contains(q))
            .map(|q| cluster.owners[q])
            .collect();
        self.rebind(Cluster {
            state: ket,
            owners: measured,
        });
        if !rest.is_empty() {
            let norm: f64 = residual.iter().map(Complex64::norm_sqr).sum();
            renormalize(&mut residual, norm);
            let state = QState::from_amplitudes(residual).expect("residual of a valid projection");
            self.rebind(Cluster {
                state,
                owners: rest,
            });
        }
    }

    /// Checks that live handles partition exactly into the qubits of the
    /// live clusters and that every state is normalized.
    pub fn audit(&self) -> Result<(), QsimError> {
        let mut seen = vec![false; self.bindings.len()];
        for (id, slot) in self.clusters.iter().enumerate() {
            let Some(c) = slot else { continue };
            if c.owners.len() != c.state.num_qubits() {
                return Err(QsimError::Corrupt("owner count differs from qubit count"));
            }
            if (c.state.norm_sqr() - 1.0).abs() > super::NORM_TOLERANCE {
                return Err(QsimError::NotNormalized(c.state.norm_sqr()));
            }
            for (qubit, h) in c.owners.iter().enumerate() {
                let b = self
                    .binding(*h)
                    .map_err(|_| QsimError::Corrupt("owner without binding"))?;
                if b.cluster != id || b.qubit != qubit {
                    return Err(QsimError::Corrupt("binding disagrees with owner list"));
                }
                if core::mem::replace(&mut seen[h.index()], true) {
                    return Err(QsimError::Corrupt("particle owned twice"));
                }
            }
        }
        if seen.iter().all(|&s| s) {
            Ok(())
        } else {
            Err(QsimError::Corrupt("dangling handle"))
        }
    }
}

/// Draws an index with the given (approximately normalized) weights.
fn sample<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        last = i;
        if u < w {
            return i;
        }
        u -= w;
    }
    last
}
