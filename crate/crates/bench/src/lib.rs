//! Seeded inputs shared by the kernel benchmarks.

use gmtk_core::sample::{Sampler, DEFAULT_SEED};
use gmtk_core::systems::builtin;
use gmtk_core::{AlgVec, DualVec, Generator, GroupElement, SystemSpec, TripletPoint};

pub struct Fixture {
    pub spec: SystemSpec,
    pub xi: AlgVec,
    pub mu: DualVec,
    pub g: GroupElement,
    pub point: TripletPoint,
    pub gens: (Generator, Generator),
}

impl Fixture {
    pub fn new(system: &str) -> Self {
        let spec = builtin(system).expect("builtin system");
        let model = spec.model.clone();
        let n = model.dim();
        let mut s = Sampler::stream(DEFAULT_SEED, "bench");
        let gen = |s: &mut Sampler| Generator {
            xi2: s.alg(n, 1.0),
            nu2: s.dual(n, 1.0),
            xi3: s.alg(n, 1.0),
            nu3: s.dual(n, 1.0),
        };
        let g = s.element(&model);
        let point = TripletPoint::new(&model, g.clone(), s.dual(n, 1.0), s.alg(n, 1.0), s.dual(n, 1.0)).expect("point");
        let gens = (gen(&mut s), gen(&mut s));
        Self {
            xi: s.alg(n, 1.0),
            mu: s.dual(n, 1.0),
            g,
            point,
            gens,
            spec,
        }
    }
}
