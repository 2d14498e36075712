#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "episim/episim.h"

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

epi_model_params irp_inf(double lambda, double beta, double phi) {
  epi_model_params p{};
  p.lambda = lambda;
  p.beta = beta;
  p.phi = phi;
  p.kappa_cap = 0;  // infinite
  p.dim = 1;
  p.recovery = EPI_RECOVERY_INDIVIDUAL;
  return p;
}

epi_run_opts run_opts(double horizon, uint64_t seed) {
  epi_run_opts o{};
  o.horizon = horizon;
  o.seed = seed;
  return o;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name)
      : path(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove_all(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  const char* c_str() const { return path.c_str(); }
};

}  // namespace

TEST_CASE("version string is exposed") {
  CHECK(std::strlen(epi_version()) >= 5);
}

TEST_CASE("invalid parameters produce EPI_E_INVALID and a message") {
  epi_model_params bad = irp_inf(-1.0, 0.0, 0.0);
  epi_run_opts opts = run_opts(1.0, 1);
  epi_survival_result result{};
  epi_status status =
      epi_survival(&bad, nullptr, nullptr, 0, &opts, 10, nullptr, &result);
  CHECK(status == EPI_E_INVALID);
  CHECK(std::strlen(epi_last_error()) > 0);
}

TEST_CASE("survival through the C surface") {
  epi_model_params params = irp_inf(0.0, 0.0, 2.0);
  epi_run_opts opts = run_opts(100.0, 42);
  epi_survival_result result{};
  TempDir dir("episim_capi_survival");
  epi_status status = epi_survival(&params, nullptr, nullptr, 0, &opts, 400,
                                   dir.c_str(), &result);
  REQUIRE(status == EPI_OK);
  CHECK(result.replicas == 400);
  CHECK(result.p_hat > 0.35);
  CHECK(result.p_hat < 0.65);
  CHECK(std::filesystem::exists(dir.path / "survival.csv"));
  CHECK(std::filesystem::exists(dir.path / "manifest.json"));
}

TEST_CASE("identical config and seed give byte-identical CSV output") {
  epi_model_params params = irp_inf(0.4, 0.2, 0.9);
  epi_run_opts opts = run_opts(20.0, 77);
  epi_survival_result result{};
  TempDir dir_a("episim_capi_rep_a");
  TempDir dir_b("episim_capi_rep_b");
  REQUIRE(epi_survival(&params, nullptr, nullptr, 0, &opts, 200, dir_a.c_str(),
                       &result) == EPI_OK);
  opts.jobs = 2;  // thread count must not matter
  REQUIRE(epi_survival(&params, nullptr, nullptr, 0, &opts, 200, dir_b.c_str(),
                       &result) == EPI_OK);
  CHECK(read_file(dir_a.path / "survival.csv") ==
        read_file(dir_b.path / "survival.csv"));
}

TEST_CASE("simulate writes trajectory snapshots and respects the budget") {
  epi_model_params params = irp_inf(0.0, 0.0, 3.0);
  epi_run_opts opts = run_opts(50.0, 5);
  opts.event_budget = 40;
  epi_sim_summary summary{};
  TempDir dir("episim_capi_sim");
  epi_status status = epi_simulate(&params, nullptr, nullptr, 0, &opts, 0.0,
                                   dir.c_str(), &summary);
  if (summary.extinct) {
    CHECK(status == EPI_OK);
  } else {
    CHECK(status == EPI_E_BUDGET);
    CHECK(summary.truncated == 1);
  }
  CHECK(std::filesystem::exists(dir.path / "trajectory.jsonl"));
}

TEST_CASE("custom initial configurations cross the C boundary") {
  epi_model_params params = irp_inf(0.0, 0.0, 0.0);
  const int64_t coords[2] = {-3, 4};
  const int64_t counts[2] = {2, 5};
  epi_run_opts opts = run_opts(100.0, 9);
  epi_sim_summary summary{};
  epi_status status = epi_simulate(&params, coords, counts, 2, &opts, 0.0,
                                   nullptr, &summary);
  REQUIRE(status == EPI_OK);
  // pure death from 7 individuals: exactly 7 events, certain extinction
  CHECK(summary.event_count == 7);
  CHECK(summary.extinct == 1);
}

TEST_CASE("coupled runs report zero violations") {
  epi_model_params a = irp_inf(0.5, 0.5, 2.0);
  epi_model_params b = irp_inf(0.5, 0.5, 1.0);
  epi_run_opts opts = run_opts(50.0, 11);
  opts.event_budget = 10000;
  epi_couple_result result{};
  TempDir dir("episim_capi_couple");
  REQUIRE(epi_couple_ordered(&a, &b, nullptr, nullptr, 0, &opts, 10,
                             dir.c_str(), &result) == EPI_OK);
  CHECK(result.violations == 0);
  CHECK(result.events_checked > 0);
  CHECK(std::filesystem::exists(dir.path / "couple_report.json"));

  epi_couple_result contact{};
  REQUIRE(epi_couple_contact(&a, nullptr, nullptr, 0, &opts, 10, nullptr,
                             &contact) == EPI_OK);
  CHECK(contact.violations == 0);
}

TEST_CASE("subcritical coupled runs emit a marginal KS summary") {
  epi_model_params a = irp_inf(0.35, 0.25, 0.5);
  epi_model_params b = irp_inf(0.25, 0.15, 0.3);
  epi_run_opts opts = run_opts(6.0, 19);
  epi_couple_result result{};
  TempDir dir("episim_capi_ks");
  REQUIRE(epi_couple_ordered(&a, &b, nullptr, nullptr, 0, &opts, 400,
                             dir.c_str(), &result) == EPI_OK);
  REQUIRE(result.truncated_replicas == 0);
  std::ifstream in(dir.path / "ks_summary.json");
  REQUIRE(in.good());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  // both marginals indistinguishable from single-process runs
  auto p_of = [&](const std::string& key) {
    auto at = text.find(key);
    REQUIRE(at != std::string::npos);
    auto pv = text.find("p_value", at);
    REQUIRE(pv != std::string::npos);
    return std::stod(text.substr(text.find(':', pv) + 1));
  };
  CHECK(p_of("marginal_a") > 0.01);
  CHECK(p_of("marginal_b") > 0.01);
}

TEST_CASE("ordered coupling rejects non-dominating parameters") {
  epi_model_params a = irp_inf(0.5, 0.5, 1.0);
  epi_model_params b = irp_inf(0.5, 0.5, 2.0);  // phi_b > phi_a
  epi_run_opts opts = run_opts(10.0, 3);
  epi_couple_result result{};
  CHECK(epi_couple_ordered(&a, &b, nullptr, nullptr, 0, &opts, 5, nullptr,
                           &result) == EPI_E_INVALID);
}

TEST_CASE("tilde rates and table through the C surface") {
  epi_tilde_params params{1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0};
  double rates[5];
  REQUIRE(epi_tilde_rates(&params, 1.0, 1.0, rates) == EPI_OK);
  CHECK(rates[1] == 9.0);  // delta1(1,1) / kappa = 9 exactly

  const double grid[2] = {0.5, 1.0};
  double max_z = 0.0;
  TempDir dir("episim_capi_tilde");
  REQUIRE(epi_tilde_table(&params, grid, 2, 100000, 3, dir.c_str(), &max_z) ==
          EPI_OK);
  CHECK(max_z < 5.0);
  CHECK(std::filesystem::exists(dir.path / "tilde_table.csv"));
}

TEST_CASE("profile evaluation kinds") {
  epi_profile_spec flat{EPI_PROFILE_CONST, 1.5, 0.0};
  double values[4];
  REQUIRE(epi_profile_eval(&flat, 4, values) == EPI_OK);
  for (double v : values) CHECK(v == 1.5);

  epi_profile_spec wave{EPI_PROFILE_COSINE, 2.0, 0.5};
  REQUIRE(epi_profile_eval(&wave, 4, values) == EPI_OK);
  CHECK(values[0] == doctest::Approx(2.5));
  CHECK(values[1] == doctest::Approx(2.0));
  CHECK(values[2] == doctest::Approx(1.5));
}

TEST_CASE("pde solve through the C surface") {
  epi_tilde_params params{0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0};
  const size_t grid = 64;
  std::vector<double> m1(grid), m2(grid);
  epi_profile_spec s1{EPI_PROFILE_COSINE, 2.0, 0.5};
  epi_profile_spec s2{EPI_PROFILE_SINE, 1.0, 0.5};
  REQUIRE(epi_profile_eval(&s1, grid, m1.data()) == EPI_OK);
  REQUIRE(epi_profile_eval(&s2, grid, m2.data()) == EPI_OK);
  const double times[2] = {0.0, 0.05};
  epi_pde_result result{};
  TempDir dir("episim_capi_pde");
  REQUIRE(epi_pde_solve(&params, m1.data(), m2.data(), grid, 0.05, 0.0, times,
                        2, dir.c_str(), &result) == EPI_OK);
  CHECK(result.steps > 0);
  CHECK(result.clip_count == 0);
  CHECK(result.max_mass_residual < 1e-8);
  CHECK(std::filesystem::exists(dir.path / "pde.csv"));
}

TEST_CASE("pde refinement diagnostic through the C surface") {
  epi_tilde_params params{0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0};
  epi_profile_spec s1{EPI_PROFILE_COSINE, 2.0, 0.5};
  epi_profile_spec s2{EPI_PROFILE_SINE, 1.0, 0.5};
  epi_pde_refine_result result{};
  TempDir dir("episim_capi_refine");
  REQUIRE(epi_pde_refine(&params, &s1, &s2, 64, 0.1, 0.0, dir.c_str(),
                         &result) == EPI_OK);
  CHECK(result.mean_shift[0] < 1e-4);
  CHECK(result.mean_shift[1] < 1e-4);
  CHECK(result.observed_order > 1.8);
  CHECK(result.observed_order < 2.2);
  CHECK(std::filesystem::exists(dir.path / "pde_refinement.json"));
}

TEST_CASE("two-species run conserves totals with zero reaction rates") {
  epi_tilde_params params{0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1};
  const int32_t n = 16;
  std::vector<double> m1(n, 2.0), m2(n, 1.0);
  epi_run_opts opts = run_opts(0.2, 21);
  const double times[2] = {0.0, 0.2};
  epi_two_species_result result{};
  TempDir dir("episim_capi_ts");
  REQUIRE(epi_two_species(&params, n, m1.data(), m2.data(), &opts, times, 2,
                          dir.c_str(), &result) == EPI_OK);
  CHECK(result.event_count > 0);
  CHECK(std::filesystem::exists(dir.path / "snapshots.csv"));
  CHECK(std::filesystem::exists(dir.path / "pairings.csv"));

  // snapshots at 0 and horizon carry identical totals
  std::ifstream in(dir.path / "snapshots.csv");
  std::string line;
  std::getline(in, line);  // header
  int64_t total_first = 0, total_last = 0;
  std::vector<std::string> rows;
  while (std::getline(in, line)) rows.push_back(line);
  REQUIRE(rows.size() == 2 * static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto parse = [](const std::string& row) {
      auto p1 = row.find(',');
      auto p2 = row.find(',', p1 + 1);
      auto p3 = row.find(',', p2 + 1);
      return std::stoll(row.substr(p2 + 1, p3 - p2 - 1)) +
             std::stoll(row.substr(p3 + 1));
    };
    total_first += parse(rows[i]);
    total_last += parse(rows[n + i]);
  }
  CHECK(total_first == total_last);
  CHECK(total_last == result.final_total_eta + result.final_total_xi);
}

TEST_CASE("window experiment through the C surface") {
  epi_tilde_params params{0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0};
  epi_profile_spec s1{EPI_PROFILE_CONST, 2.0, 0.0};
  epi_profile_spec s2{EPI_PROFILE_CONST, 1.0, 0.0};
  const int32_t ladder[2] = {2, 3};
  double disc[2] = {-1.0, -1.0};
  TempDir dir("episim_capi_window");
  REQUIRE(epi_window(&params, &s1, &s2, 8, 1, ladder, 2, 0.02, 3, 5, 0,
                     dir.c_str(), disc) == EPI_OK);
  CHECK(disc[0] >= 0.0);
  CHECK(disc[1] == 0.0);  // reference leg
  CHECK(std::filesystem::exists(dir.path / "window.csv"));
}
