#include "dfm/data.hpp"

#include "dfm/error.hpp"
#include "dfm/io.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <string>

namespace dfm {

void BlobSpec::validate() const {
    if (dim == 0) throw ConfigError("blob dimension must be positive");
    if (means.empty()) throw ConfigError("blob spec needs at least one mean");
    for (const auto& m : means) {
        if (m.size() != dim) throw ConfigError("blob mean has wrong dimension");
    }
    if (!(variance > 0.0)) throw ConfigError("blob variance must be positive");
    if (samples == 0) throw ConfigError("blob sample count must be positive");
}

BlobSpec blob_preset(std::string_view name) {
    BlobSpec s;
    if (name == "blobs2d") {
        s.dim = 2;
        s.means = {{1.0, 1.0}, {1.0, -1.0}};
    } else if (name == "blobs3d") {
        s.dim = 3;
        s.means = {{1.0, 1.0, 0.0}, {1.0, -1.0, 0.0}};
    } else {
        throw ConfigError("unknown blob preset '" + std::string(name) + "'");
    }
    return s;
}

namespace {

std::vector<Tensor> draw_blobs(const BlobSpec& spec, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double sd = std::sqrt(spec.variance);
    std::vector<Tensor> out;
    for (const auto& m : spec.means) {
        Tensor x(n, spec.dim);
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < spec.dim; ++c) x(r, c) = m[c] + sd * normal(rng);
        }
        out.push_back(std::move(x));
    }
    return out;
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    std::uint32_t words[2];
    seq.generate(words, words + 2);
    return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

} // namespace

std::vector<Tensor> gen_blobs(const BlobSpec& spec) {
    spec.validate();
    return draw_blobs(spec, spec.samples, spec.seed);
}

Tensor apply_gstar(const Tensor& x) {
    Tensor y = x;
    for (double& v : y.values()) v = -v;
    return y;
}

SyntheticData make_blob_data(const BlobSpec& spec, std::size_t eval_per_condition) {
    spec.validate();
    if (eval_per_condition == 0) throw ConfigError("evaluation split size must be positive");
    std::vector<Tensor> source = draw_blobs(spec, spec.samples, stream_seed(spec.seed, 1));
    std::vector<Tensor> target = draw_blobs(spec, spec.samples, stream_seed(spec.seed, 2));
    for (auto& t : target) t = apply_gstar(t);
    SyntheticData out{make_dataset(std::move(source), std::move(target)), {}};
    out.eval.x = draw_blobs(spec, eval_per_condition, stream_seed(spec.seed, 3));
    for (const auto& x : out.eval.x) out.eval.y.push_back(apply_gstar(x));
    return out;
}

SdcReport sdc_check(const ConditionalDataset& data, std::size_t resolution, double tol, BoxPairing pairing) {
    data.validate();
    if (data.conditions() < 2) throw Error("sdc_check needs at least two conditions");
    if (resolution == 0) throw ConfigError("sdc_check resolution must be positive");
    const std::size_t d = data.dim;
    std::vector<double> lo(d, std::numeric_limits<double>::infinity());
    std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
    for (const Tensor& x : data.source) {
        for (std::size_t r = 0; r < x.rows(); ++r) {
            for (std::size_t c = 0; c < d; ++c) {
                lo[c] = std::min(lo[c], x(r, c));
                hi[c] = std::max(hi[c], x(r, c));
            }
        }
    }
    std::size_t cells = 1;
    for (std::size_t c = 0; c < d; ++c) {
        if (cells > (std::size_t{1} << 20) / resolution) throw ConfigError("sdc_check grid too large");
        cells *= resolution;
    }
    auto cell_of = [&](std::span<const double> p) {
        std::size_t idx = 0;
        for (std::size_t c = 0; c < d; ++c) {
            const double span = hi[c] - lo[c];
            auto k = span > 0.0 ? static_cast<std::size_t>((p[c] - lo[c]) / span * static_cast<double>(resolution))
                                : std::size_t{0};
            idx = idx * resolution + std::min(k, resolution - 1);
        }
        return idx;
    };
    const std::size_t Q = data.conditions();
    std::vector<std::vector<double>> mass(Q, std::vector<double>(cells, 0.0));
    std::vector<double> pooled(cells, 0.0);
    for (std::size_t q = 0; q < Q; ++q) {
        const Tensor& x = data.source[q];
        const double w = 1.0 / static_cast<double>(x.rows());
        for (std::size_t r = 0; r < x.rows(); ++r) {
            const std::size_t k = cell_of(x.row_span(r));
            mass[q][k] += w;
            pooled[k] += w;
        }
    }
    SdcReport rep;
    auto consider = [&](std::size_t a, std::size_t b) {
        if (pooled[a] == 0.0 && pooled[b] == 0.0) return;
        ++rep.pairs;
        for (std::size_t q = 0; q < Q; ++q) {
            if (std::abs(mass[q][a] - mass[q][b]) > tol) {
                ++rep.distinguished;
                return;
            }
        }
    };
    if (pairing == BoxPairing::All) {
        for (std::size_t a = 0; a < cells; ++a) {
            for (std::size_t b = a + 1; b < cells; ++b) consider(a, b);
        }
    } else {
        // Reflection through the grid center maps cell index k to cells-1-k.
        for (std::size_t a = 0; a < cells; ++a) {
            const std::size_t b = cells - 1 - a;
            if (a < b) consider(a, b);
        }
    }
    rep.fraction = rep.pairs ? static_cast<double>(rep.distinguished) / static_cast<double>(rep.pairs) : 0.0;
    return rep;
}

void save_dataset(const std::filesystem::path& path, const ConditionalDataset& data) {
    data.validate();
    std::ofstream out(path);
    if (!out) throw IoError("cannot write dataset " + path.string());
    out << "cond,domain";
    for (std::size_t c = 0; c < data.dim; ++c) out << ",dim_" << c;
    out << '\n';
    for (std::size_t q = 0; q < data.conditions(); ++q) {
        for (const auto& [set, name] : {std::pair{&data.source[q], "source"}, std::pair{&data.target[q], "target"}}) {
            for (std::size_t r = 0; r < set->rows(); ++r) {
                out << q << ',' << name;
                for (double v : set->row_span(r)) out << ',' << format_double(v);
                out << '\n';
            }
        }
    }
    if (!out) throw IoError("failed writing dataset " + path.string());
}

namespace {

struct CsvReader {
    std::ifstream in;
    std::string name;
    std::size_t lineno = 0;

    explicit CsvReader(const std::filesystem::path& p) : in(p), name(p.string()) {
        if (!in) throw IoError("cannot read " + name);
    }
    bool next(std::vector<std::string>& fields) {
        std::string line;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            fields = split_fields(line, ',');
            return true;
        }
        return false;
    }
    std::string where() const { return name + ":" + std::to_string(lineno); }
};

std::size_t parse_cond(const std::string& f, const std::string& where) {
    const double v = parse_double(f, where);
    if (!(v >= 0.0) || v != std::floor(v) || v > 1e6) throw IoError(where + ": bad condition index '" + f + "'");
    return static_cast<std::size_t>(v);
}

// Checks the header `first,...,prefix0,prefix1,...` and returns the count of prefixed columns.
std::size_t expect_columns(const std::vector<std::string>& h, std::size_t start, const std::string& prefix,
                           const std::string& where) {
    std::size_t n = 0;
    while (start + n < h.size() && h[start + n] == prefix + std::to_string(n)) ++n;
    if (n == 0) throw IoError(where + ": header has no " + prefix + "0 column");
    return n;
}

std::vector<Tensor> to_tensors(std::map<std::size_t, std::vector<double>>& rows, std::size_t d,
                               const std::string& what) {
    std::vector<Tensor> out;
    std::size_t expected = 0;
    for (auto& [q, vals] : rows) {
        if (q != expected++) throw IoError(what + ": condition indices must be 0..Q-1 without gaps");
        const std::size_t n = vals.size() / d;
        out.emplace_back(std::vector<std::size_t>{n, d}, std::move(vals));
    }
    return out;
}

} // namespace

ConditionalDataset load_dataset(const std::filesystem::path& path) {
    CsvReader rd(path);
    std::vector<std::string> f;
    if (!rd.next(f)) throw IoError(path.string() + ": empty dataset file");
    if (f.size() < 3 || f[0] != "cond" || f[1] != "domain") {
        throw IoError(rd.where() + ": schema error, header must start with cond,domain");
    }
    const std::size_t d = expect_columns(f, 2, "dim_", rd.where());
    if (d + 2 != f.size()) throw IoError(rd.where() + ": unexpected column '" + f[d + 2] + "'");
    std::map<std::size_t, std::vector<double>> src, tgt;
    while (rd.next(f)) {
        const std::string where = rd.where();
        if (f.size() != d + 2) {
            throw IoError(where + ": expected " + std::to_string(d + 2) + " fields, found " + std::to_string(f.size()));
        }
        const std::size_t q = parse_cond(f[0], where);
        auto* dst = f[1] == "source" ? &src : f[1] == "target" ? &tgt : nullptr;
        if (!dst) throw IoError(where + ": domain must be source or target, got '" + f[1] + "'");
        for (std::size_t c = 0; c < d; ++c) {
            const double v = parse_double(f[2 + c], where);
            if (!std::isfinite(v)) throw IoError(where + ": non-finite value");
            (*dst)[q].push_back(v);
        }
    }
    if (src.size() != tgt.size()) throw IoError(path.string() + ": every condition needs source and target rows");
    try {
        return make_dataset(to_tensors(src, d, path.string()), to_tensors(tgt, d, path.string()));
    } catch (const IoError&) {
        throw;
    } catch (const Error& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

void save_paired(const std::filesystem::path& path, const PairedSplit& split) {
    if (split.x.size() != split.y.size() || split.x.empty()) throw Error("paired split needs matching x and y sets");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write paired split " + path.string());
    const std::size_t d = split.x[0].cols();
    out << "cond";
    for (std::size_t c = 0; c < d; ++c) out << ",x_" << c;
    for (std::size_t c = 0; c < d; ++c) out << ",y_" << c;
    out << '\n';
    for (std::size_t q = 0; q < split.x.size(); ++q) {
        if (!split.x[q].same_shape(split.y[q]) || split.x[q].cols() != d) {
            throw ShapeError("paired split condition " + std::to_string(q) + " has mismatched shapes");
        }
        for (std::size_t r = 0; r < split.x[q].rows(); ++r) {
            out << q;
            for (double v : split.x[q].row_span(r)) out << ',' << format_double(v);
            for (double v : split.y[q].row_span(r)) out << ',' << format_double(v);
            out << '\n';
        }
    }
    if (!out) throw IoError("failed writing paired split " + path.string());
}

PairedSplit load_paired(const std::filesystem::path& path) {
    CsvReader rd(path);
    std::vector<std::string> f;
    if (!rd.next(f)) throw IoError(path.string() + ": empty paired split file");
    if (f.empty() || f[0] != "cond") throw IoError(rd.where() + ": schema error, header must start with cond");
    const std::size_t d = expect_columns(f, 1, "x_", rd.where());
    if (expect_columns(f, 1 + d, "y_", rd.where()) != d || f.size() != 1 + 2 * d) {
        throw IoError(rd.where() + ": header needs matching x_ and y_ columns");
    }
    std::map<std::size_t, std::vector<double>> xs, ys;
    while (rd.next(f)) {
        const std::string where = rd.where();
        if (f.size() != 1 + 2 * d) {
            throw IoError(where + ": expected " + std::to_string(1 + 2 * d) + " fields, found " +
                          std::to_string(f.size()));
        }
        const std::size_t q = parse_cond(f[0], where);
        for (std::size_t c = 0; c < d; ++c) xs[q].push_back(parse_double(f[1 + c], where));
        for (std::size_t c = 0; c < d; ++c) ys[q].push_back(parse_double(f[1 + d + c], where));
    }
    if (xs.empty()) throw IoError(path.string() + ": paired split has no rows");
    return PairedSplit{to_tensors(xs, d, path.string()), to_tensors(ys, d, path.string())};
}

} // namespace dfm
