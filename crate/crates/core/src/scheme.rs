//! The uncoupled, linearized Crank-Nicolson time integrator.
//!
//! One step from t_n to t_{n+1} performs two linear SPD solves and nothing
//! else (no fixed-point iteration anywhere):
//!
//! 1. potential solve: the conductivity is frozen at the extrapolated
//!    temperature Uhat^{n+1/2} = (3 U^n - U^{n-1}) / 2 and
//!    (sigma(Uhat) grad Phi^{n+1/2}, grad v) = (f2(., t_{n+1/2}), v)
//!    is solved with boundary data g(., t_{n+1/2});
//!
//! 2. temperature solve: Crank-Nicolson averaging of the diffusion term,
//!    (M + tau/2 A) U^{n+1} = (M - tau/2 A) U^n
//!    + tau (sigma(Uhat)|grad Phi^{n+1/2}|^2 + f1(., t_{n+1/2}), v).
//!
//! Startup: U^0 is the nodal interpolant of u0, Phi^0 solves the potential
//! equation with coefficient sigma(u0) (the exact initial field), and the
//! first extrapolant Uhat^{1/2} comes from a half Euler step, semi-implicit
//! by default or explicit on request.
//!
//! The potential at integer times is reported as the average
//! Phi^n = (Phi^{n+1/2} + Phi^{n-1/2}) / 2, which requires one extra
//! potential solve after the last temperature update.

use crate::error::{Error, Result};
use crate::fem::assembly::RectCsr;
use crate::fem::{
    apply_dirichlet, AssembledSystem, Coefficient, DirichletLifter, FeSpace, LoadTerm, ScalarSource,
};
use crate::linalg::{solve_spd, CsrMatrix, SolveReport, SolverConfig};
use crate::mesh::Mesh;
use crate::mms::{error_norms, ErrorRecord, ManufacturedCase};

/// How the first extrapolant Uhat^{1/2} is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HalfStepInit {
    /// Half Euler step with implicit diffusion (the default).
    SemiImplicit,
    /// Half Euler step with the diffusion of u0 moved to the right-hand
    /// side.
    Explicit,
}

#[derive(Debug, Clone)]
pub struct SchemeConfig {
    pub dim: usize,
    /// Mesh subdivisions per axis.
    pub subdivisions: usize,
    /// Element degree, 1 or 2.
    pub degree: usize,
    pub final_time: f64,
    pub tau: f64,
    pub init: HalfStepInit,
    pub solver: SolverConfig,
}

impl SchemeConfig {
    /// Number of steps N = T / tau, which must be integral.
    pub fn n_steps(&self) -> Result<usize> {
        if self.tau <= 0.0 || self.final_time <= 0.0 {
            return Err(Error::Config(format!(
                "time step and final time must be positive (tau = {}, T = {})",
                self.tau, self.final_time
            )));
        }
        let ratio = self.final_time / self.tau;
        let n = ratio.round();
        if (ratio - n).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::Config(format!(
                "final time {} is not an integer multiple of tau {}",
                self.final_time, self.tau
            )));
        }
        Ok(n as usize)
    }
}

/// The stepper's memory between steps: U^{n-1}, U^n, the initialization
/// extrapolant and the most recent half-step potential.
#[derive(Debug, Clone)]
pub struct SchemeState {
    /// Step index n; `u_curr` holds U^n.
    pub step: usize,
    pub tau: f64,
    /// U^{n-1}; at n = 0 a copy of U^0 (never read by the extrapolation,
    /// which uses `u_hat_half` instead).
    pub u_prev: Vec<f64>,
    pub u_curr: Vec<f64>,
    /// Uhat^{1/2} from initialization, consumed by the n = 0 step.
    pub u_hat_half: Vec<f64>,
    /// Phi^{n-1/2}; at n = 0 holds the integer-time initial potential
    /// Phi^0.
    pub phi_half_prev: Vec<f64>,
}

/// Full output of a run: error records at the requested times plus the
/// final fields.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<ErrorRecord>,
    pub final_state: SchemeState,
    /// Integer-time potential at the final step.
    pub final_phi: Vec<f64>,
    pub tau: f64,
    pub n_steps: usize,
    pub total_cg_iterations: usize,
}

/// Second-order extrapolation to the half time level:
/// (3 f^n - f^{n-1}) / 2, componentwise on Lagrange coefficients.
///
/// Only valid once two time levels exist; the n = 0 step must use the
/// initialization extrapolant instead.
pub fn extrapolate_half(u_curr: &[f64], u_prev: &[f64]) -> Vec<f64> {
    debug_assert_eq!(u_curr.len(), u_prev.len());
    u_curr
        .iter()
        .zip(u_prev)
        .map(|(c, p)| (3.0 * c - p) / 2.0)
        .collect()
}

pub struct Scheme {
    space: FeSpace,
    case: ManufacturedCase,
    config: SchemeConfig,
    n_steps: usize,
    /// Full mass matrix.
    mass: CsrMatrix,
    /// Full unit-coefficient stiffness matrix.
    stiffness: CsrMatrix,
    /// M + tau/2 A over all dofs.
    temp_lhs_full: CsrMatrix,
    /// M - tau/2 A over all dofs.
    temp_rhs_full: CsrMatrix,
    lifter: DirichletLifter,
    temp_lhs_red: CsrMatrix,
    temp_lhs_fd: RectCsr,
    // reusable workspaces for the per-step potential assembly
    pot_full: CsrMatrix,
    pot_red: CsrMatrix,
    pot_fd: RectCsr,
}

impl Scheme {
    pub fn new(config: SchemeConfig, case: ManufacturedCase) -> Result<Scheme> {
        if config.dim != case.dim {
            return Err(Error::Config(format!(
                "case is {}-dimensional but the configuration asks for dim {}",
                case.dim, config.dim
            )));
        }
        let n_steps = config.n_steps()?;
        let mesh = match config.dim {
            2 => Mesh::unit_square(config.subdivisions)?,
            3 => Mesh::unit_cube(config.subdivisions)?,
            d => return Err(Error::Config(format!("unsupported dimension {}", d))),
        };
        let space = FeSpace::new(mesh, config.degree)?;

        let mass = space.assemble_mass();
        let stiffness = space.assemble_stiffness(&Coefficient::Constant(1.0), None)?;
        let mut temp_lhs_full = mass.clone();
        let mut temp_rhs_full = mass.clone();
        let half_tau = 0.5 * config.tau;
        for ((lhs, rhs), &a) in temp_lhs_full
            .values_mut()
            .iter_mut()
            .zip(temp_rhs_full.values_mut())
            .zip(stiffness.values())
        {
            // same sparsity pattern by construction
            *lhs += half_tau * a;
            *rhs -= half_tau * a;
        }

        let lifter = DirichletLifter::new(&mass, &space.dofmap().is_dirichlet);
        let mut temp_lhs_red = lifter.reduced_zero();
        let mut temp_lhs_fd = lifter.fd_zero();
        lifter.split_values(&temp_lhs_full, &mut temp_lhs_red, &mut temp_lhs_fd);

        let pot_full = space.zero_matrix();
        let pot_red = lifter.reduced_zero();
        let pot_fd = lifter.fd_zero();

        Ok(Scheme {
            space,
            case,
            config,
            n_steps,
            mass,
            stiffness,
            temp_lhs_full,
            temp_rhs_full,
            lifter,
            temp_lhs_red,
            temp_lhs_fd,
            pot_full,
            pot_red,
            pot_fd,
        })
    }

    pub fn space(&self) -> &FeSpace {
        &self.space
    }

    pub fn case(&self) -> &ManufacturedCase {
        &self.case
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.config
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn mass_matrix(&self) -> &CsrMatrix {
        &self.mass
    }

    pub fn stiffness_matrix(&self) -> &CsrMatrix {
        &self.stiffness
    }

    /// The extrapolant Uhat^{n+1/2} feeding the conductivity of step n.
    pub fn sigma_extrapolant(&self, state: &SchemeState) -> Vec<f64> {
        if state.step == 0 {
            state.u_hat_half.clone()
        } else {
            extrapolate_half(&state.u_curr, &state.u_prev)
        }
    }

    fn admissible(&self) -> Option<(f64, f64)> {
        Some((self.case.sigma_min, self.case.sigma_max))
    }

    /// Builds U^0 = interpolant of u0, the initial potential Phi^0 (with
    /// conductivity sigma composed with the exact u0 field) and the first
    /// extrapolant Uhat^{1/2} by the configured half Euler step.
    pub fn initialize(&mut self) -> Result<SchemeState> {
        let case = self.case;
        let u0_coeffs = self.space.interpolate(&|p| (case.u)(p, 0.0));

        // Phi^0: potential equation with sigma(u0), boundary g(., 0)
        let sigma_u0 = move |p: [f64; 3]| (case.sigma)((case.u)(p, 0.0));
        let (phi0, _rep) = self
            .solve_potential(&Coefficient::Function(&sigma_u0), 0.0)
            .map_err(|e| Error::StepFailed {
                step: 0,
                stage: "initial potential",
                source: Box::new(e),
            })?;

        // Uhat^{1/2} by a half Euler step of length tau/2
        let half_tau = 0.5 * self.config.tau;
        let forcing0 = move |p: [f64; 3]| (case.f1)(p, 0.0);
        let u0_exact = move |p: [f64; 3]| (case.u)(p, 0.0);
        let mut rhs = self.space.assemble_load(&LoadTerm::Function(&u0_exact));
        self.space.add_load_into(
            &LoadTerm::Joule {
                temperature: ScalarSource::Function(&u0_exact),
                potential: &phi0,
                sigma: &case.sigma,
                forcing: &forcing0,
            },
            half_tau,
            &mut rhs,
        );
        let bv = self
            .space
            .dirichlet_values(&|p| (case.u)(p, half_tau));
        let u_hat_half = match self.config.init {
            HalfStepInit::SemiImplicit => {
                let rhs_free = self.lifter.reduce_rhs(&rhs, &self.temp_lhs_fd, &bv);
                let (x, _rep) = solve_spd(&self.temp_lhs_red, &rhs_free, &self.config.solver)
                    .map_err(|e| Error::StepFailed {
                        step: 0,
                        stage: "half-step initialization",
                        source: Box::new(e),
                    })?;
                self.lifter.embed(&x, &bv)
            }
            HalfStepInit::Explicit => {
                let grad_u0 = move |p: [f64; 3]| (case.grad_u)(p, 0.0);
                self.space
                    .add_load_into(&LoadTerm::GradFunction(&grad_u0), -half_tau, &mut rhs);
                let mut mass_red = self.lifter.reduced_zero();
                let mut mass_fd = self.lifter.fd_zero();
                self.lifter.split_values(&self.mass, &mut mass_red, &mut mass_fd);
                let rhs_free = self.lifter.reduce_rhs(&rhs, &mass_fd, &bv);
                let (x, _rep) = solve_spd(&mass_red, &rhs_free, &self.config.solver).map_err(|e| {
                    Error::StepFailed {
                        step: 0,
                        stage: "half-step initialization",
                        source: Box::new(e),
                    }
                })?;
                self.lifter.embed(&x, &bv)
            }
        };

        Ok(SchemeState {
            step: 0,
            tau: self.config.tau,
            u_prev: u0_coeffs.clone(),
            u_curr: u0_coeffs,
            u_hat_half,
            phi_half_prev: phi0,
        })
    }

    /// Assembles and solves the potential equation with the given
    /// coefficient at time t (boundary g(., t), load f2(., t)). Returns the
    /// full coefficient vector including boundary values.
    fn solve_potential(
        &mut self,
        coeff: &Coefficient,
        t: f64,
    ) -> Result<(Vec<f64>, SolveReport)> {
        let case = self.case;
        self.space
            .assemble_stiffness_into(coeff, self.admissible(), &mut self.pot_full)?;
        let rhs = self
            .space
            .assemble_load(&LoadTerm::Function(&move |p| (case.f2)(p, t)));
        let bv = self.space.dirichlet_values(&move |p| case.g(p, t));
        self.lifter
            .split_values(&self.pot_full, &mut self.pot_red, &mut self.pot_fd);
        let rhs_free = self.lifter.reduce_rhs(&rhs, &self.pot_fd, &bv);
        let (x, rep) = solve_spd(&self.pot_red, &rhs_free, &self.config.solver)?;
        Ok((self.lifter.embed(&x, &bv), rep))
    }

    /// Potential solve of step n: conductivity sigma(Uhat^{n+1/2}),
    /// boundary data and load at t_{n+1/2}.
    pub fn potential_step(&mut self, state: &SchemeState) -> Result<(Vec<f64>, SolveReport)> {
        let u_hat = self.sigma_extrapolant(state);
        let t_half = (state.step as f64 + 0.5) * self.config.tau;
        let sigma = self.case.sigma;
        self.solve_potential(
            &Coefficient::MappedField {
                coeffs: &u_hat,
                map: &sigma,
            },
            t_half,
        )
        .map_err(|e| Error::StepFailed {
            step: state.step,
            stage: "potential",
            source: Box::new(e),
        })
    }

    /// Temperature solve of step n given Phi^{n+1/2}: one Crank-Nicolson
    /// update returning the full U^{n+1} coefficient vector.
    pub fn temperature_step(
        &mut self,
        state: &SchemeState,
        phi_half: &[f64],
    ) -> Result<(Vec<f64>, SolveReport)> {
        let u_hat = self.sigma_extrapolant(state);
        let case = self.case;
        let tau = self.config.tau;
        let t_mid = (state.step as f64 + 0.5) * tau;
        let t_next = (state.step as f64 + 1.0) * tau;

        let mut rhs = vec![0.0; self.space.n_dofs()];
        self.temp_rhs_full.spmv_into(&state.u_curr, &mut rhs);
        let forcing = move |p: [f64; 3]| (case.f1)(p, t_mid);
        self.space.add_load_into(
            &LoadTerm::Joule {
                temperature: ScalarSource::FeField(&u_hat),
                potential: phi_half,
                sigma: &case.sigma,
                forcing: &forcing,
            },
            tau,
            &mut rhs,
        );
        let bv = self.space.dirichlet_values(&move |p| (case.u)(p, t_next));
        let rhs_free = self.lifter.reduce_rhs(&rhs, &self.temp_lhs_fd, &bv);
        let (x, rep) =
            solve_spd(&self.temp_lhs_red, &rhs_free, &self.config.solver).map_err(|e| {
                Error::StepFailed {
                    step: state.step,
                    stage: "temperature",
                    source: Box::new(e),
                }
            })?;
        Ok((self.lifter.embed(&x, &bv), rep))
    }

    /// The potential system of step n as a standalone reduced system
    /// (for verification against direct solvers).
    pub fn potential_system(&self, u_hat: &[f64], t_half: f64) -> Result<AssembledSystem> {
        let case = self.case;
        let sigma = case.sigma;
        let full = self.space.assemble_stiffness(
            &Coefficient::MappedField {
                coeffs: u_hat,
                map: &sigma,
            },
            self.admissible(),
        )?;
        let rhs = self
            .space
            .assemble_load(&LoadTerm::Function(&move |p| (case.f2)(p, t_half)));
        let bv = self.space.dirichlet_values(&move |p| case.g(p, t_half));
        Ok(apply_dirichlet(
            &full,
            &rhs,
            &self.space.dofmap().is_dirichlet,
            &bv,
        ))
    }

    /// The temperature system of step n as a standalone reduced system.
    pub fn temperature_system(
        &self,
        u_curr: &[f64],
        u_hat: &[f64],
        phi_half: &[f64],
        t_mid: f64,
        t_next: f64,
    ) -> Result<AssembledSystem> {
        let case = self.case;
        let tau = self.config.tau;
        let mut rhs = vec![0.0; self.space.n_dofs()];
        self.temp_rhs_full.spmv_into(u_curr, &mut rhs);
        let forcing = move |p: [f64; 3]| (case.f1)(p, t_mid);
        self.space.add_load_into(
            &LoadTerm::Joule {
                temperature: ScalarSource::FeField(u_hat),
                potential: phi_half,
                sigma: &case.sigma,
                forcing: &forcing,
            },
            tau,
            &mut rhs,
        );
        let bv = self.space.dirichlet_values(&move |p| (case.u)(p, t_next));
        Ok(apply_dirichlet(
            &self.temp_lhs_full,
            &rhs,
            &self.space.dofmap().is_dirichlet,
            &bv,
        ))
    }

    /// Runs initialization and the full time loop, recording errors at the
    /// requested times (each snapped to the nearest step). The potential
    /// error at integer time t_n uses the average of the two neighbouring
    /// half-step potentials, so a final extra potential solve closes the
    /// run.
    pub fn run(&mut self, report_times: &[f64]) -> Result<RunOutput> {
        let tau = self.config.tau;
        let n_steps = self.n_steps;
        let mut report_steps: Vec<usize> = report_times
            .iter()
            .map(|&t| (t / tau).round() as usize)
            .filter(|&n| n <= n_steps)
            .collect();
        report_steps.sort_unstable();
        report_steps.dedup();

        let mut state = self.initialize()?;
        let mut records = Vec::new();
        let mut total_cg = 0usize;
        let mut final_phi = state.phi_half_prev.clone();

        for n in 0..=n_steps {
            let (phi_half, rep) = self.potential_step(&state)?;
            total_cg += rep.iterations;

            if report_steps.binary_search(&n).is_ok() {
                let t_n = n as f64 * tau;
                let phi_at_n: Vec<f64> = if n == 0 {
                    state.phi_half_prev.clone()
                } else {
                    average(&phi_half, &state.phi_half_prev)
                };
                let t_half = if n == 0 { 0.0 } else { t_n - 0.5 * tau };
                records.push(self.measure(
                    &state.u_curr,
                    &phi_at_n,
                    &state.phi_half_prev,
                    t_n,
                    t_half,
                ));
            }

            if n == n_steps {
                final_phi = if n == 0 {
                    state.phi_half_prev.clone()
                } else {
                    average(&phi_half, &state.phi_half_prev)
                };
                break;
            }

            let (u_next, rep) = self.temperature_step(&state, &phi_half)?;
            total_cg += rep.iterations;

            state.u_prev = std::mem::replace(&mut state.u_curr, u_next);
            state.phi_half_prev = phi_half;
            state.step = n + 1;
        }

        Ok(RunOutput {
            records,
            final_state: state,
            final_phi,
            tau,
            n_steps,
            total_cg_iterations: total_cg,
        })
    }

    /// Error record of the two fields at time t. `phi_back_half` is the
    /// most recent half-step potential (Phi^{n-1/2}, measured at
    /// `t_half`).
    pub fn measure(
        &self,
        u_coeffs: &[f64],
        phi_coeffs: &[f64],
        phi_back_half: &[f64],
        t: f64,
        t_half: f64,
    ) -> ErrorRecord {
        let case = self.case;
        let p = 12.0 / 5.0;
        let eu = error_norms(&self.space, u_coeffs, case.u, case.grad_u, t, 2.0);
        let ephi = error_norms(&self.space, phi_coeffs, case.phi, case.grad_phi, t, p);

        // discrete errors against the nodal interpolants
        let zero = |_: [f64; 3], _: f64| 0.0;
        let zero_grad = |_: [f64; 3], _: f64| [0.0; 3];
        let u_i = self.space.interpolate(&|x| (case.u)(x, t));
        let phi_i = self.space.interpolate(&|x| (case.phi)(x, t));
        let du = diff(u_coeffs, &u_i);
        let dphi = diff(phi_coeffs, &phi_i);
        let deu = error_norms(&self.space, &du, zero, zero_grad, t, 2.0);
        let dephi = error_norms(&self.space, &dphi, zero, zero_grad, t, p);

        let phi_half_i = self.space.interpolate(&|x| (case.phi)(x, t_half));
        let dhalf = diff(phi_back_half, &phi_half_i);
        let dehalf = error_norms(&self.space, &dhalf, zero, zero_grad, t_half, 2.0);

        ErrorRecord {
            t,
            u_l2: eu.l2,
            u_h1: eu.h1,
            phi_l2: ephi.l2,
            phi_h1: ephi.h1,
            phi_lp: ephi.lp,
            phi_w1p: ephi.w1p_semi,
            u_l2_disc: deu.l2,
            u_h1_disc: deu.h1,
            phi_l2_disc: dephi.l2,
            phi_h1_disc: dephi.h1,
            phi_lp_disc: dephi.lp,
            phi_w1p_disc: dephi.w1p_semi,
            phi_half_l2_disc: dehalf.l2,
        }
    }
}

fn average(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect()
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}
