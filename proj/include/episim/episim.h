/* episim — lattice epidemic processes: cluster/individual-recovery contact
 * process variants, a two-species migration-reaction process, survival and
 * critical-parameter estimation, and hydrodynamic-limit experiments against
 * a reaction-diffusion solver.
 *
 * C89-compatible surface over the C++ core. All functions return an
 * epi_status; on failure epi_last_error() carries a message naming the
 * violated precondition. Passing out_dir = NULL skips file output; otherwise
 * the call writes its CSV/JSON products plus a manifest.json into out_dir.
 */
#ifndef EPISIM_EPISIM_H
#define EPISIM_EPISIM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define EPISIM_API __declspec(dllexport)
#else
#define EPISIM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum epi_status {
  EPI_OK = 0,
  EPI_E_INVALID = 2, /* invalid configuration or precondition violated */
  EPI_E_BUDGET = 3,  /* event budget or count guard exhausted */
  EPI_E_IO = 4,
  EPI_E_INTERNAL = 5
} epi_status;

EPISIM_API const char* epi_version(void);
/* Thread-local message describing the last failure in this thread. */
EPISIM_API const char* epi_last_error(void);

/* ------------------------------------------------------------------ */
/* Cluster epidemic processes (CRP / IRP)                              */

typedef enum epi_recovery {
  EPI_RECOVERY_INDIVIDUAL = 0, /* i -> i-1 at rate i */
  EPI_RECOVERY_CLUSTER = 1     /* i -> 0 at rate 1 */
} epi_recovery;

typedef struct epi_model_params {
  double lambda;     /* outside infection rate into healthy clusters */
  double beta;       /* outside infection rate into infected clusters */
  double phi;        /* within-cluster infection rate */
  int64_t kappa_cap; /* cluster size cap; <= 0 means infinite */
  int32_t dim;       /* lattice dimension, 1..3 */
  int32_t recovery;  /* epi_recovery */
} epi_model_params;

typedef struct epi_run_opts {
  double horizon;
  uint64_t seed;
  uint64_t event_budget;          /* 0: default 10^8 per replica */
  uint64_t survival_count_cutoff; /* 0: default 10^4; survival runs only */
  int32_t jobs;                   /* <= 0: all hardware threads */
  double tau_leap;                /* two-species only; > 0 switches to the
                                     exploratory tau-leap stepper */
} epi_run_opts;

/* Initial configurations are passed as n_sites entries; entry i occupies
 * coordinates site_coords[i*dim .. i*dim + dim - 1] with counts[i] infected
 * individuals. n_sites = 0 means the canonical start: one infected
 * individual at the origin. */

typedef struct epi_sim_summary {
  double final_time;
  uint64_t event_count;
  int32_t truncated;
  int32_t extinct;
  double extinction_time; /* meaningful when extinct != 0 */
  int64_t final_total;
} epi_sim_summary;

/* Writes trajectory.jsonl (snapshots every snapshot_interval) when out_dir
 * is given. */
EPISIM_API epi_status epi_simulate(const epi_model_params* params,
                                   const int64_t* site_coords,
                                   const int64_t* counts, size_t n_sites,
                                   const epi_run_opts* opts,
                                   double snapshot_interval,
                                   const char* out_dir, epi_sim_summary* out);

typedef struct epi_survival_result {
  double p_hat;
  double ci_halfwidth;
  uint64_t replicas;
  uint64_t survivors;
  uint64_t truncated;     /* replicas stopped by the event budget */
  uint64_t early_decided; /* replicas classified via the count cutoff */
} epi_survival_result;

EPISIM_API epi_status epi_survival(const epi_model_params* params,
                                   const int64_t* site_coords,
                                   const int64_t* counts, size_t n_sites,
                                   const epi_run_opts* opts, uint64_t replicas,
                                   const char* out_dir,
                                   epi_survival_result* out);

typedef struct epi_phic_result {
  double phi_c;
  double bracket_lo;
  double bracket_hi;
  uint64_t probes;
} epi_phic_result;

/* Bisection of phi against the finite-horizon survival estimate. The phi
 * field of *base is ignored. */
EPISIM_API epi_status epi_phi_c(const epi_model_params* base, double phi_lo,
                                double phi_hi, double threshold,
                                double tolerance, const epi_run_opts* opts,
                                uint64_t replicas_per_probe,
                                const char* out_dir, epi_phic_result* out);

typedef struct epi_couple_result {
  uint64_t violations;
  uint64_t events_checked;
  uint64_t replicas;
  uint64_t truncated_replicas;
} epi_couple_result;

/* Ordered coupling: params_a >= params_b componentwise, both marginals
 * started from the same initial configuration; counts must dominate at
 * every event. */
EPISIM_API epi_status epi_couple_ordered(const epi_model_params* params_a,
                                         const epi_model_params* params_b,
                                         const int64_t* site_coords,
                                         const int64_t* counts, size_t n_sites,
                                         const epi_run_opts* opts,
                                         uint64_t replicas, const char* out_dir,
                                         epi_couple_result* out);

/* Coupling of the model against the basic contact process at the same
 * lambda (kappa = 1, beta = phi = 0); occupancy must dominate. */
EPISIM_API epi_status epi_couple_contact(const epi_model_params* params,
                                         const int64_t* site_coords,
                                         const int64_t* counts, size_t n_sites,
                                         const epi_run_opts* opts,
                                         uint64_t replicas, const char* out_dir,
                                         epi_couple_result* out);

/* ------------------------------------------------------------------ */
/* Product Poisson measures and the tilde averages                     */

typedef struct epi_tilde_params {
  double alpha1;      /* healthy birth coefficient */
  double alpha2;      /* infected birth coefficient */
  double kappa_death; /* death coefficient (the reaction kappa) */
  double lambda;
  double beta;
  double phi;
  int32_t disable_recovery; /* nonzero: drop the rate-1 recovery channel
                               (diffusion-only diagnostics) */
} epi_tilde_params;

/* out_rates = { beta1, delta1, beta2, delta2, g } in closed form. */
EPISIM_API epi_status epi_tilde_rates(const epi_tilde_params* params, double a,
                                      double b, double out_rates[5]);

/* Closed forms against Monte Carlo on the (a, b) grid x grid; writes
 * tilde_table.csv. max_z_out receives the largest |closed - mc| / stderr. */
EPISIM_API epi_status epi_tilde_table(const epi_tilde_params* params,
                                      const double* grid, size_t grid_len,
                                      uint64_t mc_samples, uint64_t seed,
                                      const char* out_dir, double* max_z_out);

/* ------------------------------------------------------------------ */
/* Profiles on the continuum torus [0,1)                               */

typedef enum epi_profile_kind {
  EPI_PROFILE_CONST = 0,
  EPI_PROFILE_COSINE = 1, /* level + amplitude * cos(2 pi theta) */
  EPI_PROFILE_SINE = 2    /* level + amplitude * sin(2 pi theta) */
} epi_profile_kind;

typedef struct epi_profile_spec {
  int32_t kind;
  double level;
  double amplitude;
} epi_profile_spec;

EPISIM_API epi_status epi_profile_eval(const epi_profile_spec* spec, size_t n,
                                       double* out_values);

/* ------------------------------------------------------------------ */
/* Reaction-diffusion solver                                           */

typedef struct epi_pde_result {
  uint64_t steps;
  int64_t clip_count;
  double max_mass_residual;
  double min_value;
  int32_t below_positivity_floor; /* min over the run fell below 1e-6 */
} epi_pde_result;

/* Solves d/dt lambda = 1/2 Lap lambda + F(lambda) from the grid profiles
 * m1, m2 (length grid); writes pde.csv rows (t, theta, lambda1, lambda2)
 * at the requested output times. cfl_safety <= 0 selects the default 0.4. */
EPISIM_API epi_status epi_pde_solve(const epi_tilde_params* params,
                                    const double* m1, const double* m2,
                                    size_t grid, double horizon,
                                    double cfl_safety,
                                    const double* output_times, size_t n_times,
                                    const char* out_dir, epi_pde_result* out);

typedef struct epi_pde_refine_result {
  double mean_shift[2];     /* change of the grid mean per species when the
                               grid (and dt) is halved in spacing */
  double observed_order;    /* from three nested grids at shared points */
} epi_pde_refine_result;

/* Richardson refinement diagnostic; initial data from the profile specs so
 * finer grids are exact evaluations. Writes pde_refinement.json. */
EPISIM_API epi_status epi_pde_refine(const epi_tilde_params* params,
                                     const epi_profile_spec* m1,
                                     const epi_profile_spec* m2, size_t grid,
                                     double horizon, double cfl_safety,
                                     const char* out_dir,
                                     epi_pde_refine_result* out);

/* ------------------------------------------------------------------ */
/* Two-species migration-reaction process on the torus T_N             */

typedef struct epi_two_species_result {
  uint64_t event_count;
  int32_t truncated;
  int64_t final_total_eta;
  int64_t final_total_xi;
} epi_two_species_result;

/* m1, m2: per-site Poisson intensities (length n_sites) for the initial
 * product measure. Writes snapshots.csv and pairings.csv. */
EPISIM_API epi_status epi_two_species(const epi_tilde_params* params,
                                      int32_t n_sites, const double* m1,
                                      const double* m2,
                                      const epi_run_opts* opts,
                                      const double* snapshot_times,
                                      size_t n_times, const char* out_dir,
                                      epi_two_species_result* out);

/* ------------------------------------------------------------------ */
/* Experiments                                                         */

typedef struct epi_converge_result {
  int32_t monotone; /* error at the largest N below error at the smallest,
                       for every (time, observable, species) */
  double max_error_largest_n;
  double refined_target_shift;
  double min_stderr;
} epi_converge_result;

/* Hydrodynamic convergence: N ladder, product Poisson initial data from the
 * profile specs, standard observables {1, cos, sin}. Writes
 * convergence.csv. */
EPISIM_API epi_status epi_hydro_converge(
    const epi_tilde_params* params, const epi_profile_spec* m1,
    const epi_profile_spec* m2, const int32_t* torus_sizes, size_t n_sizes,
    uint64_t replicas, const double* times, size_t n_times, uint64_t seed,
    int32_t jobs, const char* out_dir, epi_converge_result* out);

/* Window experiment: tori of half-width C*N under shared site-keyed event
 * streams, per-site discrepancy inside {-A*N..A*N} against the largest C.
 * mean_disc_out receives n_c values in ladder order. Writes window.csv. */
EPISIM_API epi_status epi_window(const epi_tilde_params* params,
                                 const epi_profile_spec* m1,
                                 const epi_profile_spec* m2, int32_t n_scale,
                                 int32_t window_a, const int32_t* c_ladder,
                                 size_t n_c, double horizon, uint64_t replicas,
                                 uint64_t seed, int32_t jobs,
                                 const char* out_dir, double* mean_disc_out);

#ifdef __cplusplus
}
#endif

#endif /* EPISIM_EPISIM_H */
