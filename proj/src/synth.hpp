#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "series.hpp"

namespace leadlag {

// Deterministic generator: mt19937_64 (standard-specified sequence) with
// Box-Muller normals, so identical seeds reproduce identical fixtures.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform01(); // in (0, 1]
    double normal();

    static const char* algorithm_id() { return "mt19937_64/box-muller"; }

  private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

struct PlantedLink {
    std::size_t leader = 0;
    std::size_t follower = 0;
    std::size_t lag = 1;      // bars, >= 1
    double beta = 0.0;        // transmission coefficient
    double noise_ratio = 1.0; // follower idio std / transmitted-signal std
};

// Contemporaneous co-movement block: members share a latent factor with the
// given loading, which is what Stage-1 screening is designed to pick up.
struct CouplingGroup {
    std::vector<std::size_t> members;
    double loading = 0.0; // in (0, 1)
};

struct SynthSpec {
    std::uint64_t seed = 1;
    std::size_t n_symbols = 2;
    std::size_t bars_per_symbol = 1000;
    Granularity granularity = Granularity::Min1;
    double base_vol = 0.001; // per-bar return std of root symbols
    std::vector<PlantedLink> links;
    std::pair<double, double> market_beta_range = {0.0, 0.0};
    std::vector<CouplingGroup> groups;
    bool session_calendar = false; // split 09:30-11:30 / 13:00-15:00 day

    void validate() const;
};

struct LinkTruth {
    PlantedLink link;
    std::string leader_symbol;
    std::string follower_symbol;
    double population_ccf_peak = 0.0; // CCF at the planted lag
    double population_r2 = 0.0;       // squared, the Eq.7-style target
};

struct GenerateResult {
    std::vector<BarSeries> bars;
    std::vector<LinkTruth> truth;
    std::string rng_id;
};

std::string synth_symbol_name(std::size_t index); // "000001", "000002", ...

GenerateResult generate(const SynthSpec& spec);

struct ManifestFile {
    std::string path;
    std::string symbol;
    Granularity granularity = Granularity::Daily;
    std::size_t rows = 0;
    std::string digest; // fnv1a64 of file bytes, hex
};

struct Manifest {
    std::string generator;
    std::vector<ManifestFile> files;

    std::string to_json() const;
};

// Writes data_<granularity>_fixed/<symbol>.csv per series under root_dir,
// plus manifest.json.
Manifest write_fixture(const std::vector<BarSeries>& bars,
                       const std::string& root_dir);

std::uint64_t fnv1a64(const std::string& bytes);

// A synth spec file is a JSON document naming the SynthSpec fields plus an
// optional "emit" list of granularities; coarser granularities are resampled
// from the generated base series.
struct SynthJob {
    SynthSpec spec;
    std::vector<Granularity> emit;
};

SynthJob synth_job_from_json(const std::string& text, const std::string& source);
SynthJob load_synth_job(const std::string& path);

// Generate, resample for every emit granularity, write the fixture tree and
// truth.json with the analytic per-link values.
Manifest run_synth_job(const SynthJob& job, const std::string& out_root);

} // namespace leadlag
