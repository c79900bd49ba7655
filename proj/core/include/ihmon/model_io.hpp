#pragma once

#include "ihmon/model.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <variant>
#include <vector>

namespace ihmon {

inline constexpr int kModelFormatVersion = 1;
inline constexpr const char* kModelFormatName = "ihmon-model";

/// A loaded model document: an HMM or an iHMM plus an optional spec.
struct ModelDocument {
    std::variant<Hmm, Ihmm> model;
    std::optional<Spec> spec;

    bool is_hmm() const { return std::holds_alternative<Hmm>(model); }
    const Hmm& hmm() const { return std::get<Hmm>(model); }
    const Ihmm& ihmm() const { return std::get<Ihmm>(model); }
};

/// JSON document with fields version, kind, states, observations, obs_map,
/// init / init_lo / init_hi, trans / trans_lo / trans_hi (sparse
/// [row, col, value] triplets) and an optional spec. Every probability is
/// written with 17 significant digits, so load(save(m)) is bit-exact.
void save_model(std::ostream& os, const Hmm& m, const Spec* spec = nullptr);
void save_model(std::ostream& os, const Ihmm& m, const Spec* spec = nullptr);
void save_model_file(const std::filesystem::path& file, const Hmm& m, const Spec* spec = nullptr);
void save_model_file(const std::filesystem::path& file, const Ihmm& m, const Spec* spec = nullptr);

/// Throws ParseError on malformed input or unsupported version.
ModelDocument load_model(std::istream& is);
ModelDocument load_model_file(const std::filesystem::path& file);

inline constexpr const char* kDatasetHeader = "# ihmon-paths 1 schema=ihmon-model/1";

/// One path per line as whitespace-separated state names, preceded by the
/// dataset header line.
void save_paths(std::ostream& os, const std::vector<Path>& paths, std::span<const std::string> states);
/// Reads a dataset written by save_paths. Blank lines are skipped; a missing
/// or foreign header raises ParseError, as do unknown state names.
std::vector<Path> load_paths(std::istream& is, std::span<const std::string> states);

/// Text for a probability: "%.17g".
std::string format_prob(double x);

} // namespace ihmon
