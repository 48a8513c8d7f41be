#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sdaf/diagnostics.hpp"

namespace sdaf {

inline constexpr const char* kFormatVersion = "sdaf-1";

// Flat key = value configuration text ('#' comments, dotted keys).
class KeyValueConfig {
 public:
  static KeyValueConfig parse_file(const std::filesystem::path& path);
  static KeyValueConfig parse_text(const std::string& text);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key) const;  // throws naming the key
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  std::vector<double> get_double_list(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key) const;

  // Canonical text (sorted keys) used for echoes and fingerprints.
  std::string canonical_text() const;
  std::uint64_t fingerprint() const;

 private:
  std::map<std::string, std::string> kv_;
};

// Materialized experiment configuration.
struct ExperimentSetup {
  SurfaceDomain domain;
  std::shared_ptr<TargetManifold> target;
  HomotopyClass cls;
  ActionConfig action;
  SolverConfig solver;
  ContinuationSchedule schedule;
  std::string kind;
  std::uint64_t seed = 1;
  double init_noise = 0.05;
  int spectrum_m = 24;
  double scan_radius = 0.0;  // 0 = side/4
  double eps0 = 0.1;
  int samples = 1000;
  double flow_horizon = 5.0;
  int trials = 5;
  int steps = 11;
  std::string growth_kind = "canonical";
  std::uint64_t config_fingerprint = 0;
};

ExperimentSetup build_setup(const KeyValueConfig& cfg);

// Self-describing archive: one "sdaf-1" magic line, a single-line JSON
// header, then the raw little-endian arrays in header order.
struct ArchiveArray {
  std::string name;
  std::string kind;  // "f64" or "c128"
  std::vector<double> f64;
  std::vector<cdouble> c128;
};

struct Archive {
  std::string header_json;
  std::map<std::string, ArchiveArray> arrays;
};

void save_state_archive(const std::filesystem::path& path, const MapField& phi,
                        const PlainSpinor* psi, std::uint64_t config_fingerprint,
                        std::uint64_t seed);
Archive load_archive(const std::filesystem::path& path);
// Loads phi (+ psi when present) from an archive, validating domain/target
// compatibility against the provided fields.
void load_state_archive(const std::filesystem::path& path, MapField& phi, PlainSpinor& psi,
                        bool* has_psi);

// CSV exports, each with a ".schema.txt" sidecar documenting the columns.
void export_spectrum_csv(const std::filesystem::path& path, const SpectralData& spec);
void export_flow_csv(const std::filesystem::path& path, const FlowTrace& trace);
void export_continuation_csv(const std::filesystem::path& path, const ContinuationReport& rep);
void export_concentration_csv(const std::filesystem::path& path, const ConcentrationScan& scan,
                              const SurfaceDomain& dom);

// Executes the configured experiment; writes report.json, summary.txt and
// experiment outputs into out_dir. Returns the process exit status:
// 0 = success with all verdicts PASS, 2 = a verdict FAILED, 1 = execution error.
int run_experiment(const KeyValueConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace sdaf
