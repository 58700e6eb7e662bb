#ifndef AVIEB_INSTGEN_HPP
#define AVIEB_INSTGEN_HPP

#include "avieb/avi.hpp"
#include "avieb/core.hpp"
#include "avieb/gpm.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace avieb {

enum class Monotonicity { strongly_monotone, monotone_skew, indefinite };

const char* to_string(Monotonicity m);
Monotonicity monotonicity_from_string(const std::string& s);

/// Random AVI with a nonempty constraint set: every row has slack in [0.5, 1.5]
/// at a random witness point. When m > n the first n + 1 rows bound C.
/// strongly_monotone: M = A^T A + I; monotone_skew: M = B - B^T;
/// indefinite: M has independent standard normal entries.
AviInstance generate_random_avi(Index n, Index m, Monotonicity kind, std::uint64_t seed);

/// Random multifunction with standard normal data. With `bounded_sections`,
/// rows -1 <= y_j - c_j <= 1 are appended (c drawn once), so every nonempty
/// section is bounded and the graph has points. Caps: n, r, k, p <= 50.
GpMultifunction generate_random_gpm(Index n, Index r, Index k, Index p, bool bounded_sections,
                                    std::uint64_t seed);

enum class Spectrum { harmonic, constant };

const char* to_string(Spectrum s);

/// M_n = diag(mu_1..mu_n) with mu_i = 1/i (harmonic) or 1 (constant),
/// q_i = -mu_i (so the unique solution is the all-ones vector), C_n = R^n_+.
struct TruncationFamily {
  Spectrum spectrum = Spectrum::harmonic;

  double mu(Index i) const;  // 1-based index
  AviInstance make(Index n) const;
};

struct ExpectedProperties {
  std::optional<double> error_bound_c;  // exact constant of the error bound
  std::optional<double> lipschitz_c;    // exact Lipschitz modulus of a multifunction
  bool solution_set_nonempty = true;
  std::string note;
};

using SuiteItem = std::variant<AviInstance, GpMultifunction>;

struct CannedEntry {
  std::string name;
  SuiteItem item;
  ExpectedProperties expected;
};

std::vector<CannedEntry> canned_suite();

// Serialization. Files carry "schema_version": "1" and a "kind" tag.
struct InstanceManifest {
  std::string name;
  std::uint64_t seed = 0;
  std::string generator;  // "random_avi", "random_gpm", "truncation", "canned"
  std::vector<std::pair<std::string, std::string>> parameters;
  std::string path;  // instance file, relative to the manifest's root
};

std::string serialize_instance(const SuiteItem& item);
SuiteItem parse_instance(const std::string& text);

void save_instance(const std::filesystem::path& path, const SuiteItem& item);
SuiteItem load_instance(const std::filesystem::path& path);

void save_manifest(const std::filesystem::path& path, const InstanceManifest& manifest);
InstanceManifest load_manifest(const std::filesystem::path& path);

/// Rebuilds the instance described by a manifest.
SuiteItem regenerate(const InstanceManifest& manifest);

/// Creates instances/, manifests/ and reports/ under root.
void ensure_layout(const std::filesystem::path& root);

}  // namespace avieb

#endif  // AVIEB_INSTGEN_HPP
