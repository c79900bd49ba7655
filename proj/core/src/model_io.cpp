#include "ihmon/model_io.hpp"

#include "ihmon/error.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace ihmon {

using nlohmann::json;

std::string format_prob(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace {

std::string quoted(const std::string& s) { return json(s).dump(); }

void write_names(std::ostream& os, const char* key, const std::vector<std::string>& names) {
    os << "  \"" << key << "\": [";
    for (std::size_t i = 0; i < names.size(); ++i) os << (i ? ", " : "") << quoted(names[i]);
    os << "],\n";
}

void write_dense(std::ostream& os, const char* key, const std::vector<double>& v) {
    os << "  \"" << key << "\": [";
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << format_prob(v[i]);
    os << "],\n";
}

struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
};

void write_triplets(std::ostream& os, const char* key, const std::vector<Triplet>& entries, bool last = false) {
    os << "  \"" << key << "\": [";
    for (std::size_t i = 0; i < entries.size(); ++i) {
        os << (i ? ",\n    " : "\n    ") << '[' << entries[i].row << ", " << entries[i].col << ", "
           << format_prob(entries[i].value) << ']';
    }
    os << (entries.empty() ? "]" : "\n  ]") << (last ? "\n" : ",\n");
}

void write_header(std::ostream& os, const char* kind, const std::vector<std::string>& states,
                  const std::vector<std::string>& symbols) {
    os << "{\n  \"format\": \"" << kModelFormatName << "\",\n  \"version\": " << kModelFormatVersion
       << ",\n  \"kind\": \"" << kind << "\",\n";
    write_names(os, "states", states);
    write_names(os, "observations", symbols);
}

void write_spec(std::ostream& os, const Spec* spec, const std::vector<std::string>& states) {
    if (!spec) return;
    os << "  \"spec\": {\"horizon\": " << spec->horizon << ", \"bad\": [";
    bool first = true;
    for (StateId s = 0; s < states.size(); ++s) {
        if (!spec->is_bad(s)) continue;
        os << (first ? "" : ", ") << quoted(states[s]);
        first = false;
    }
    os << "]},\n";
}

const json& field(const json& doc, const char* key) {
    auto it = doc.find(key);
    if (it == doc.end()) throw ParseError(std::string("model document lacks field '") + key + "'");
    return *it;
}

std::vector<std::string> read_names(const json& doc, const char* key) {
    const auto& arr = field(doc, key);
    if (!arr.is_array()) throw ParseError(std::string("field '") + key + "' must be an array");
    std::vector<std::string> out;
    for (const auto& v : arr) {
        if (!v.is_string()) throw ParseError(std::string("field '") + key + "' must hold strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

std::vector<double> read_dense(const json& doc, const char* key, std::size_t n) {
    const auto& arr = field(doc, key);
    if (!arr.is_array() || arr.size() != n) throw ParseError(std::string("field '") + key + "' has wrong length");
    std::vector<double> out;
    for (const auto& v : arr) {
        if (!v.is_number()) throw ParseError(std::string("field '") + key + "' must hold numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

std::vector<Triplet> read_triplets(const json& doc, const char* key, std::size_t rows, std::size_t cols) {
    const auto& arr = field(doc, key);
    if (!arr.is_array()) throw ParseError(std::string("field '") + key + "' must be an array");
    std::vector<Triplet> out;
    for (const auto& t : arr) {
        if (!t.is_array() || t.size() != 3 || !t[0].is_number_unsigned() || !t[1].is_number_unsigned() ||
            !t[2].is_number())
            throw ParseError(std::string("field '") + key + "' must hold [row, col, value] triplets");
        Triplet e{t[0].get<std::size_t>(), t[1].get<std::size_t>(), t[2].get<double>()};
        if (e.row >= rows || e.col >= cols) throw ParseError(std::string("index out of range in '") + key + "'");
        out.push_back(e);
    }
    return out;
}

} // namespace

void save_model(std::ostream& os, const Hmm& m, const Spec* spec) {
    write_header(os, "hmm", m.states, m.symbols);
    write_spec(os, spec, m.states);
    write_dense(os, "init", m.init);
    std::vector<Triplet> obs, trans;
    for (std::size_t s = 0; s < m.num_states(); ++s) {
        for (const auto& e : m.obs[s]) obs.push_back({s, e.symbol, e.p});
        for (const auto& t : m.trans[s]) trans.push_back({s, t.to, t.p});
    }
    write_triplets(os, "obs_map", obs);
    write_triplets(os, "trans", trans, true);
    os << "}\n";
}

void save_model(std::ostream& os, const Ihmm& m, const Spec* spec) {
    write_header(os, "ihmm", m.states, m.symbols);
    write_spec(os, spec, m.states);
    write_dense(os, "init_lo", m.init_lo);
    write_dense(os, "init_hi", m.init_hi);
    std::vector<Triplet> obs, lo, hi;
    for (std::size_t s = 0; s < m.num_states(); ++s) {
        obs.push_back({s, m.obs[s], 1.0});
        for (const auto& t : m.trans[s]) {
            lo.push_back({s, t.to, t.lo});
            hi.push_back({s, t.to, t.hi});
        }
    }
    write_triplets(os, "obs_map", obs);
    write_triplets(os, "trans_lo", lo);
    write_triplets(os, "trans_hi", hi, true);
    os << "}\n";
}

template <class Model>
static void save_to_file(const std::filesystem::path& file, const Model& m, const Spec* spec) {
    std::ofstream os(file, std::ios::binary);
    if (!os) throw Error("cannot open '" + file.string() + "' for writing");
    save_model(os, m, spec);
    if (!os) throw Error("failed writing '" + file.string() + "'");
}

void save_model_file(const std::filesystem::path& file, const Hmm& m, const Spec* spec) { save_to_file(file, m, spec); }
void save_model_file(const std::filesystem::path& file, const Ihmm& m, const Spec* spec) { save_to_file(file, m, spec); }

ModelDocument load_model(std::istream& is) {
    json doc;
    try {
        doc = json::parse(is);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("model document is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("model document must be a JSON object");
    if (field(doc, "format") != kModelFormatName) throw ParseError("not an ihmon-model document");
    if (field(doc, "version") != kModelFormatVersion)
        throw ParseError("unsupported model format version " + field(doc, "version").dump());
    const auto kind = field(doc, "kind");
    auto states = read_names(doc, "states");
    auto symbols = read_names(doc, "observations");
    const std::size_t n = states.size();

    std::optional<Spec> spec;
    if (auto it = doc.find("spec"); it != doc.end()) {
        const auto& js = *it;
        auto bad = read_names(js, "bad");
        const auto& h = field(js, "horizon");
        if (!h.is_number_unsigned()) throw ParseError("spec horizon must be a positive integer");
        try {
            spec = Spec::from_names(states, bad, h.get<std::size_t>());
        } catch (const UnknownState& e) {
            throw ParseError(e.what());
        }
    }

    ModelDocument out;
    out.spec = std::move(spec);
    auto obs = read_triplets(doc, "obs_map", n, symbols.size());

    if (kind == "hmm") {
        Hmm m;
        m.states = std::move(states);
        m.symbols = std::move(symbols);
        m.init = read_dense(doc, "init", n);
        m.trans.resize(n);
        m.obs.resize(n);
        for (const auto& e : obs) m.obs[e.row].push_back({static_cast<SymbolId>(e.col), e.value});
        for (const auto& t : read_triplets(doc, "trans", n, n))
            m.trans[t.row].push_back({static_cast<StateId>(t.col), t.value});
        m.sort_rows();
        out.model = std::move(m);
    } else if (kind == "ihmm") {
        Ihmm m;
        m.states = std::move(states);
        m.symbols = std::move(symbols);
        m.init_lo = read_dense(doc, "init_lo", n);
        m.init_hi = read_dense(doc, "init_hi", n);
        m.trans.resize(n);
        m.obs.assign(n, static_cast<SymbolId>(m.symbols.size()));
        for (const auto& e : obs) {
            if (e.value != 1.0) throw ParseError("iHMM observations must be deterministic");
            m.obs[e.row] = static_cast<SymbolId>(e.col);
        }
        for (std::size_t s = 0; s < n; ++s)
            if (m.obs[s] >= m.symbols.size()) throw ParseError("iHMM state '" + m.states[s] + "' lacks an observation");
        auto lo = read_triplets(doc, "trans_lo", n, n);
        auto hi = read_triplets(doc, "trans_hi", n, n);
        if (lo.size() != hi.size()) throw ParseError("trans_lo and trans_hi must list the same entries");
        for (std::size_t i = 0; i < lo.size(); ++i) {
            if (lo[i].row != hi[i].row || lo[i].col != hi[i].col)
                throw ParseError("trans_lo and trans_hi must list the same entries");
            m.trans[lo[i].row].push_back({static_cast<StateId>(lo[i].col), lo[i].value, hi[i].value});
        }
        try {
            m.sort_rows();
        } catch (const Error& e) {
            throw ParseError(e.what());
        }
        out.model = std::move(m);
    } else {
        throw ParseError("unknown model kind " + kind.dump());
    }
    return out;
}

ModelDocument load_model_file(const std::filesystem::path& file) {
    std::ifstream is(file, std::ios::binary);
    if (!is) throw ParseError("cannot open model file '" + file.string() + "'");
    return load_model(is);
}

void save_paths(std::ostream& os, const std::vector<Path>& paths, std::span<const std::string> states) {
    os << kDatasetHeader << '\n';
    for (const auto& p : paths) os << format_path(p, states) << '\n';
}

std::vector<Path> load_paths(std::istream& is, std::span<const std::string> states) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("# ihmon-paths 1", 0) != 0)
        throw ParseError("dataset lacks the '# ihmon-paths 1' header");
    std::vector<Path> out;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(parse_path(line, states));
        } catch (const UnknownState& e) {
            throw ParseError("dataset line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

} // namespace ihmon
