#pragma once

#include "pxspk/grid.hpp"
#include "pxspk/medium.hpp"
#include "pxspk/moments.hpp"
#include "pxspk/propagate.hpp"
#include "pxspk/scaling.hpp"
#include "pxspk/stats.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace pxspk
{

/// Two-point probe of the second moment E[phi(z, r, x) phi*(z, r, y)].
struct ProbePair
{
    VectorXr x;
    VectorXr y;
};

struct CompareSection
{
    VectorXr r;
    std::vector<ProbePair> pairs;
    /// Optional theta refinement sweep for the paraxial solver.
    std::vector<Real> theta_sweep;
    Real z = 1.0;
    /// Step of the paraxial sweep runs; the grid step when absent.
    std::optional<Real> paraxial_dz;
};

struct OutputsSection
{
    std::string dir = "out";
    bool csv = true;
    bool json = true;
};

struct ExperimentConfig
{
    MediumSpec medium = MediumSpec::vacuum(1);
    ScalingRegime regime;
    std::optional<PhysicalScenario> physical;
    Grid grid;
    SourceSpec source;
    EnsembleConfig ensemble;
    Index shards = 1;
    std::optional<CompareSection> compare;
    OutputsSection outputs;

    nlohmann::json canonical;
    /// FNV-1a 64-bit hash of the canonical JSON dump, hex encoded.
    std::string hash;
};

/// Validates a parsed document; unknown keys and bad values throw SchemaError.
ExperimentConfig parse_config(const nlohmann::json& doc);

/// Reads a JSON document; malformed JSON throws ParseError, unreadable files IoError.
nlohmann::json load_config_document(const std::filesystem::path& path);

/// load_config_document followed by parse_config.
ExperimentConfig load_config(const std::filesystem::path& path);

std::string fnv1a_hex(std::string_view bytes);

/// Probe pairs flattened into ensemble probes (one probe of two points per pair).
std::vector<Probe> pair_probes(const CompareSection& compare);

} // namespace pxspk
