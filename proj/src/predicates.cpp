#include "dnlrl/predicates.hpp"

#include <array>
#include <cmath>
#include <set>
#include <sstream>

namespace dnlrl {

void FeatureSchema::validate() const
{
    std::vector<std::string> problems;
    std::set<std::string> seen;
    for (const auto& f : continuous) {
        if (!(f.low < f.high)) {
            problems.push_back("feature '" + f.name + "': low must be < high");
        }
        if (f.bins < 1) {
            problems.push_back("feature '" + f.name + "': bins must be >= 1");
        }
        if (!seen.insert(f.name).second) {
            problems.push_back("duplicate feature name '" + f.name + "'");
        }
    }
    for (const auto& f : discrete) {
        if (!seen.insert(f.name).second) {
            problems.push_back("duplicate feature name '" + f.name + "'");
        }
    }
    if (!problems.empty()) {
        std::ostringstream os;
        os << "invalid feature schema:";
        for (const auto& p : problems) {
            os << "\n  - " << p;
        }
        throw ConfigError(os.str());
    }
}

namespace {

double square(double x) { return x * x; }
double cube(double x) { return x * x * x; }
double sine(double x) { return std::sin(x); }
double cosine(double x) { return std::cos(x); }

const std::array<UnaryTransform, 4>& transform_table()
{
    static const std::array<UnaryTransform, 4> table{{
        {"sine", "Sine", &sine},
        {"cosine", "Cosine", &cosine},
        {"square", "Square", &square},
        {"cube", "Cube", &cube},
    }};
    return table;
}

int feature_index(const FeatureSchema& schema, const std::string& name)
{
    for (std::size_t i = 0; i < schema.continuous.size(); ++i) {
        if (schema.continuous[i].name == name) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

} // namespace

const UnaryTransform& lookup_transform(std::string_view name)
{
    for (const auto& t : transform_table()) {
        if (t.name == name) {
            return t;
        }
    }
    throw ConfigError("unknown transform '" + std::string(name) + "'");
}

std::pair<double, double> transform_codomain(const UnaryTransform& f, double low, double high)
{
    if (f.name == "sine" || f.name == "cosine") {
        return {-1.0, 1.0};
    }
    if (f.name == "square") {
        const double hi = std::max(low * low, high * high);
        const double lo = (low <= 0.0 && high >= 0.0) ? 0.0 : std::min(low * low, high * high);
        return {lo, hi};
    }
    return {f.apply(low), f.apply(high)}; // monotone
}

void TransformKB::validate(const FeatureSchema& schema) const
{
    for (const auto& [feature, fn] : entries) {
        if (feature_index(schema, feature) < 0) {
            throw ConfigError("transform registered for unknown continuous feature '" + feature + "'");
        }
        lookup_transform(fn);
    }
}

ProcessedState process_state(const Eigen::Ref<const Eigen::VectorXd>& raw, const FeatureSchema& schema,
                             const TransformKB& kb)
{
    const auto n_cont = static_cast<Eigen::Index>(schema.continuous.size());
    if (raw.size() != schema.state_size()) {
        throw DimensionError("state has " + std::to_string(raw.size()) + " features, schema expects "
                             + std::to_string(schema.state_size()));
    }
    if (!raw.allFinite()) {
        throw NumericError("state contains a non-finite feature");
    }
    ProcessedState out;
    out.values.resize(n_cont + static_cast<Eigen::Index>(kb.entries.size()));
    Eigen::Index next = n_cont;
    for (Eigen::Index i = 0; i < n_cont; ++i) {
        out.values(i) = raw(i);
    }
    for (Eigen::Index i = 0; i < n_cont; ++i) {
        const auto it = kb.entries.find(schema.continuous[i].name);
        if (it != kb.entries.end()) {
            out.values(next++) = lookup_transform(it->second).apply(raw(i));
        }
    }
    out.discrete.resize(schema.discrete.size());
    for (std::size_t d = 0; d < schema.discrete.size(); ++d) {
        out.discrete[d] = raw(n_cont + static_cast<Eigen::Index>(d)) > 0.5;
    }
    return out;
}

ProcessedBatch process_batch(const Eigen::Ref<const Eigen::MatrixXd>& raw, const FeatureSchema& schema,
                             const TransformKB& kb)
{
    const auto n_cont = static_cast<Eigen::Index>(schema.continuous.size());
    const auto n_disc = static_cast<Eigen::Index>(schema.discrete.size());
    if (raw.cols() != schema.state_size()) {
        throw DimensionError("state batch has " + std::to_string(raw.cols()) + " features, schema expects "
                             + std::to_string(schema.state_size()));
    }
    if (!raw.allFinite()) {
        throw NumericError("state batch contains a non-finite feature");
    }
    ProcessedBatch out;
    out.values.resize(raw.rows(), n_cont + static_cast<Eigen::Index>(kb.entries.size()));
    out.values.leftCols(n_cont) = raw.leftCols(n_cont);
    Eigen::Index next = n_cont;
    for (Eigen::Index i = 0; i < n_cont; ++i) {
        const auto it = kb.entries.find(schema.continuous[i].name);
        if (it != kb.entries.end()) {
            const auto fn = lookup_transform(it->second).apply;
            out.values.col(next++) = raw.col(i).unaryExpr(fn);
        }
    }
    out.discrete = (raw.rightCols(n_disc).array() > 0.5).cast<double>();
    return out;
}

ProcessedBatch stack(const std::vector<ProcessedState>& states)
{
    ProcessedBatch out;
    if (states.empty()) {
        return out;
    }
    const auto b = static_cast<Eigen::Index>(states.size());
    out.values.resize(b, states.front().values.size());
    out.discrete.resize(b, static_cast<Eigen::Index>(states.front().discrete.size()));
    for (Eigen::Index r = 0; r < b; ++r) {
        const auto& s = states[static_cast<std::size_t>(r)];
        if (s.values.size() != out.values.cols()
            || static_cast<Eigen::Index>(s.discrete.size()) != out.discrete.cols()) {
            throw DimensionError("stack: processed states differ in arity");
        }
        out.values.row(r) = s.values.transpose();
        for (Eigen::Index d = 0; d < out.discrete.cols(); ++d) {
            out.discrete(r, d) = s.discrete[static_cast<std::size_t>(d)] ? 1.0 : 0.0;
        }
    }
    return out;
}

Eigen::Index PredicateBank::atoms() const
{
    Eigen::Index n = 0;
    for (const auto& s : sources) {
        n += 2 * s.bins();
    }
    return n + 2 * static_cast<Eigen::Index>(discrete.size());
}

std::vector<AtomLabel> PredicateBank::labels() const
{
    std::vector<AtomLabel> out;
    out.reserve(static_cast<std::size_t>(atoms()));
    for (std::size_t s = 0; s < sources.size(); ++s) {
        for (int i = 0; i < sources[s].bins(); ++i) {
            out.push_back({sources[s].name, AtomKind::Greater, static_cast<int>(s), i});
            out.push_back({sources[s].name, AtomKind::Less, static_cast<int>(s), i});
        }
    }
    for (std::size_t d = 0; d < discrete.size(); ++d) {
        out.push_back({discrete[d], AtomKind::True, static_cast<int>(d), 0});
        out.push_back({discrete[d], AtomKind::False, static_cast<int>(d), 0});
    }
    return out;
}

namespace {

PredicateSource binned_source(std::string name, int feature, std::string transform, double low, double high,
                              int bins)
{
    if (bins < 1) {
        throw ConfigError("feature '" + name + "': bins must be >= 1");
    }
    PredicateSource s{std::move(name), feature, std::move(transform), Eigen::VectorXd(bins), Eigen::VectorXd(bins)};
    const double width = (high - low) / bins;
    for (int i = 0; i < bins; ++i) {
        s.greater_than(i) = low + i * width;
        s.less_than(i) = low + (i + 1) * width;
    }
    return s;
}

} // namespace

PredicateBank init_equal_width(const FeatureSchema& schema, const TransformKB& kb, double c)
{
    schema.validate();
    kb.validate(schema);
    PredicateBank bank;
    bank.c = c;
    for (std::size_t i = 0; i < schema.continuous.size(); ++i) {
        const auto& f = schema.continuous[i];
        bank.sources.push_back(binned_source(f.name, static_cast<int>(i), "", f.low, f.high, f.bins));
    }
    for (std::size_t i = 0; i < schema.continuous.size(); ++i) {
        const auto& f = schema.continuous[i];
        const auto it = kb.entries.find(f.name);
        if (it == kb.entries.end()) {
            continue;
        }
        const auto& fn = lookup_transform(it->second);
        const auto [lo, hi] = transform_codomain(fn, f.low, f.high);
        bank.sources.push_back(binned_source(f.name + fn.suffix, static_cast<int>(i), fn.name, lo, hi, f.bins));
    }
    for (const auto& d : schema.discrete) {
        bank.discrete.push_back(d.name);
    }
    return bank;
}

Eigen::VectorXd eval_transform_predicates(double x, const UnaryTransform& f, const PredicateSource& source, double c)
{
    const double fx = f.apply(x);
    Eigen::VectorXd out(2 * source.bins());
    for (Eigen::Index i = 0; i < source.bins(); ++i) {
        out(2 * i) = eval_gt(fx, source.greater_than(i), c);
        out(2 * i + 1) = eval_lt(fx, source.less_than(i), c);
    }
    return out;
}

Eigen::MatrixXd build_input_values(const ProcessedBatch& batch, const PredicateBank& bank)
{
    if (batch.values.cols() != static_cast<Eigen::Index>(bank.sources.size())
        || batch.discrete.cols() != static_cast<Eigen::Index>(bank.discrete.size())) {
        throw DimensionError("input matrix: processed batch arity does not match predicate bank");
    }
    const Eigen::Index b = batch.rows();
    Eigen::MatrixXd out(b, bank.atoms());
    Eigen::Index col = 0;
    for (std::size_t s = 0; s < bank.sources.size(); ++s) {
        const auto& src = bank.sources[s];
        const auto x = batch.values.col(static_cast<Eigen::Index>(s));
        for (Eigen::Index i = 0; i < src.bins(); ++i) {
            const double gt = src.greater_than(i);
            const double lt = src.less_than(i);
            for (Eigen::Index r = 0; r < b; ++r) {
                out(r, col) = eval_gt(x(r), gt, bank.c);
                out(r, col + 1) = eval_lt(x(r), lt, bank.c);
            }
            col += 2;
        }
    }
    for (Eigen::Index d = 0; d < batch.discrete.cols(); ++d) {
        out.col(col) = batch.discrete.col(d);
        out.col(col + 1) = (1.0 - batch.discrete.col(d).array()).matrix();
        col += 2;
    }
    return out;
}

InputMatrix build_input_matrix(const ProcessedBatch& batch, const PredicateBank& bank)
{
    return {build_input_values(batch, bank), bank.labels()};
}

BankGradient BankGradient::zeros_like(const PredicateBank& bank)
{
    BankGradient g;
    for (const auto& s : bank.sources) {
        g.greater_than.push_back(Eigen::VectorXd::Zero(s.bins()));
        g.less_than.push_back(Eigen::VectorXd::Zero(s.bins()));
    }
    return g;
}

void backward(const ProcessedBatch& batch, const PredicateBank& bank, const Eigen::Ref<const Eigen::MatrixXd>& d_input,
              BankGradient& grad)
{
    if (d_input.cols() != bank.atoms() || d_input.rows() != batch.rows()) {
        throw DimensionError("bank backward: gradient shape does not match input matrix");
    }
    const double c = bank.c;
    Eigen::Index col = 0;
    for (std::size_t s = 0; s < bank.sources.size(); ++s) {
        const auto& src = bank.sources[s];
        const auto x = batch.values.col(static_cast<Eigen::Index>(s));
        for (Eigen::Index i = 0; i < src.bins(); ++i) {
            double g_gt = 0.0;
            double g_lt = 0.0;
            for (Eigen::Index r = 0; r < batch.rows(); ++r) {
                const double gt = eval_gt(x(r), src.greater_than(i), c);
                const double lt = eval_lt(x(r), src.less_than(i), c);
                // d sigma(c (x - b)) / db = -c gt (1 - gt); d sigma(-c (x - b)) / db = c lt (1 - lt)
                g_gt -= d_input(r, col) * c * gt * (1.0 - gt);
                g_lt += d_input(r, col + 1) * c * lt * (1.0 - lt);
            }
            grad.greater_than[s](i) += g_gt;
            grad.less_than[s](i) += g_lt;
            col += 2;
        }
    }
    for (std::size_t s = 0; s < bank.sources.size(); ++s) {
        if (!grad.greater_than[s].allFinite() || !grad.less_than[s].allFinite()) {
            throw NumericError("bank backward: non-finite bound gradient");
        }
    }
}

} // namespace dnlrl
