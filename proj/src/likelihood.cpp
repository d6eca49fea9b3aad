#include "kolchin/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

#include "csv.hpp"

namespace kolchin {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double digamma(double x) {
  double result = 0.0;
  while (x < 6.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double f = 1.0 / (x * x);
  return result + std::log(x) - 0.5 / x -
         f * (1.0 / 12 - f * (1.0 / 120 - f * (1.0 / 252 - f * (1.0 / 240 - f / 132))));
}

}  // namespace

// --- RecordTable ------------------------------------------------------------

RecordTable::RecordTable(std::vector<FieldSpec> fields, std::vector<Category> values,
                         std::vector<std::string> record_ids,
                         std::optional<std::vector<std::int64_t>> truth)
    : fields_(std::move(fields)),
      values_(std::move(values)),
      record_ids_(std::move(record_ids)),
      truth_(std::move(truth)) {
  if (values_.size() != record_ids_.size() * fields_.size()) {
    throw std::invalid_argument("RecordTable: value count does not match N x F");
  }
  if (truth_ && truth_->size() != record_ids_.size()) {
    throw std::invalid_argument("RecordTable: truth length does not match N");
  }
  for (Index n = 0; n < record_ids_.size(); ++n) {
    for (Index f = 0; f < fields_.size(); ++f) {
      if (value(n, f) >= fields_[f].num_categories()) {
        throw std::invalid_argument("RecordTable: category index out of range");
      }
    }
  }
}

std::vector<double> RecordTable::empirical_distribution(Index field) const {
  std::vector<double> freq(fields_.at(field).num_categories(), 0.0);
  for (Index n = 0; n < num_records(); ++n) freq[value(n, field)] += 1.0;
  for (double& x : freq) x /= static_cast<double>(num_records());
  return freq;
}

Index RecordTable::agreements(Index i, Index j) const {
  Index a = 0;
  auto ri = row(i);
  auto rj = row(j);
  for (Index f = 0; f < ri.size(); ++f) a += ri[f] == rj[f];
  return a;
}

RecordTable read_records_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("records csv: empty input");
  auto header = csv::split_line(line);
  if (header.empty() || header[0] != "record_id") {
    throw std::invalid_argument("records csv: first column must be record_id");
  }
  const bool has_truth = header.size() > 1 && header[1] == "entity_id";
  const Index first_field = has_truth ? 2 : 1;
  if (header.size() <= first_field) {
    throw std::invalid_argument("records csv: no categorical fields");
  }
  std::vector<FieldSpec> fields;
  for (Index c = first_field; c < header.size(); ++c) fields.push_back({header[c], {}});
  std::vector<std::unordered_map<std::string, Category>> vocab(fields.size());

  std::vector<Category> values;
  std::vector<std::string> ids;
  std::vector<std::int64_t> truth;
  std::unordered_map<std::string, std::int64_t> entity_codes;
  Index line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto cells = csv::split_line(line);
    if (cells.size() != header.size()) {
      throw std::invalid_argument("records csv: line " + std::to_string(line_no) +
                                  " has " + std::to_string(cells.size()) +
                                  " cells, expected " + std::to_string(header.size()));
    }
    ids.push_back(cells[0]);
    if (has_truth) {
      auto [it, _] = entity_codes.emplace(cells[1], entity_codes.size());
      truth.push_back(it->second);
    }
    for (Index f = 0; f < fields.size(); ++f) {
      const std::string& v = cells[first_field + f];
      if (v.empty()) {
        throw std::invalid_argument("records csv: missing value in field '" +
                                    fields[f].name + "' on line " +
                                    std::to_string(line_no) +
                                    " (missing values are not supported)");
      }
      auto [it, inserted] = vocab[f].emplace(v, fields[f].categories.size());
      if (inserted) fields[f].categories.push_back(v);
      values.push_back(it->second);
    }
  }
  if (ids.empty()) throw std::invalid_argument("records csv: no records");
  std::optional<std::vector<std::int64_t>> t;
  if (has_truth) t = std::move(truth);
  return RecordTable(std::move(fields), std::move(values), std::move(ids), std::move(t));
}

void write_records_csv(std::ostream& out, const RecordTable& table) {
  out << "record_id";
  if (table.has_truth()) out << ",entity_id";
  for (const auto& f : table.fields()) out << ',' << csv::quote(f.name);
  out << '\n';
  for (Index n = 0; n < table.num_records(); ++n) {
    out << csv::quote(table.record_ids()[n]);
    if (table.has_truth()) out << ',' << table.truth()[n];
    for (Index f = 0; f < table.num_fields(); ++f) {
      out << ',' << csv::quote(table.fields()[f].categories[table.value(n, f)]);
    }
    out << '\n';
  }
}

// --- priors -----------------------------------------------------------------

FieldPrior FieldPrior::empirical(const RecordTable& table, double delta0, bool tied) {
  FieldPrior fp;
  fp.tied = tied;
  fp.delta.assign(tied ? 1 : table.num_fields(), delta0);
  for (Index f = 0; f < table.num_fields(); ++f) {
    fp.gamma.push_back(table.empirical_distribution(f));
  }
  return fp;
}

double cluster_field_log_ml(std::span<const std::uint32_t> counts, double delta,
                            std::span<const double> gamma) {
  if (counts.size() != gamma.size()) {
    throw std::invalid_argument("cluster_field_log_ml: counts and gamma differ in length");
  }
  double n = 0.0;
  double lp = 0.0;
  for (Index v = 0; v < counts.size(); ++v) {
    if (counts[v] == 0) continue;
    if (!(gamma[v] > 0.0)) {
      throw std::domain_error("cluster_field_log_ml: observed category has zero base mass");
    }
    const double a = delta * gamma[v];
    lp += std::lgamma(a + counts[v]) - std::lgamma(a);
    n += counts[v];
  }
  return lp + std::lgamma(delta) - std::lgamma(delta + n);
}

// --- SufficientStats ----------------------------------------------------------

SufficientStats::SufficientStats(const RecordTable& table, const Partition& p)
    : table_(&table),
      num_fields_(table.num_fields()),
      cells_(p.size() * table.num_fields()),
      sizes_(p.size(), 0) {
  if (p.size() != table.num_records()) {
    throw std::invalid_argument("SufficientStats: partition and table differ in N");
  }
  for (Index n = 0; n < p.size(); ++n) {
    if (p.cluster_of(n) != kUnassigned) add(n, p.cluster_of(n));
  }
}

void SufficientStats::add(Index record, Index cluster) {
  auto row = table_->row(record);
  for (Index f = 0; f < num_fields_; ++f) {
    auto& cell = cells_[cluster * num_fields_ + f];
    auto it = std::find_if(cell.begin(), cell.end(),
                           [v = row[f]](const Entry& e) { return e.category == v; });
    if (it == cell.end()) {
      cell.push_back({row[f], 1});
    } else {
      ++it->count;
    }
  }
  ++sizes_[cluster];
}

void SufficientStats::remove(Index record, Index cluster) {
  auto row = table_->row(record);
  for (Index f = 0; f < num_fields_; ++f) {
    auto& cell = cells_[cluster * num_fields_ + f];
    auto it = std::find_if(cell.begin(), cell.end(),
                           [v = row[f]](const Entry& e) { return e.category == v; });
    if (it == cell.end()) throw std::logic_error("SufficientStats: record not counted");
    if (--it->count == 0) {
      *it = cell.back();
      cell.pop_back();
    }
  }
  --sizes_[cluster];
}

std::uint32_t SufficientStats::count(Index cluster, Index field, Category v) const {
  for (const Entry& e : counts(cluster, field)) {
    if (e.category == v) return e.count;
  }
  return 0;
}

bool SufficientStats::operator==(const SufficientStats& other) const {
  if (sizes_ != other.sizes_ || num_fields_ != other.num_fields_) return false;
  for (Index i = 0; i < cells_.size(); ++i) {
    auto a = cells_[i];
    auto b = other.cells_[i];
    auto by_cat = [](const Entry& x, const Entry& y) { return x.category < y.category; };
    std::sort(a.begin(), a.end(), by_cat);
    std::sort(b.begin(), b.end(), by_cat);
    if (a.size() != b.size()) return false;
    for (Index k = 0; k < a.size(); ++k) {
      if (a[k].category != b[k].category || a[k].count != b[k].count) return false;
    }
  }
  return true;
}

// --- CollapsedCategorical -----------------------------------------------------

CollapsedCategorical::CollapsedCategorical(const RecordTable& table, FieldPrior prior)
    : table_(&table), prior_(std::move(prior)) {
  if (prior_.gamma.size() != table.num_fields()) {
    throw std::invalid_argument("CollapsedCategorical: need one gamma per field");
  }
  const Index expected_delta = prior_.tied ? 1 : table.num_fields();
  if (prior_.delta.size() != expected_delta) {
    throw std::invalid_argument("CollapsedCategorical: wrong number of delta values");
  }
  for (double d : prior_.delta) {
    if (!(d > 0.0)) throw std::domain_error("CollapsedCategorical: delta must be positive");
  }
  for (Index f = 0; f < table.num_fields(); ++f) {
    const auto& g = prior_.gamma[f];
    if (g.size() != table.fields()[f].num_categories()) {
      throw std::invalid_argument("CollapsedCategorical: gamma size mismatch for field " +
                                  table.fields()[f].name);
    }
    double total = 0.0;
    std::vector<double> lg(g.size());
    for (Index v = 0; v < g.size(); ++v) {
      if (g[v] < 0.0) throw std::domain_error("CollapsedCategorical: negative gamma");
      total += g[v];
      lg[v] = g[v] > 0.0 ? std::log(g[v]) : kNegInf;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw std::domain_error("CollapsedCategorical: gamma does not sum to one");
    }
    log_gamma_.push_back(std::move(lg));
  }
}

void CollapsedCategorical::set_delta(Index slot, double delta) {
  if (!(delta > 0.0)) throw std::domain_error("set_delta: delta must be positive");
  prior_.delta.at(slot) = delta;
}

double CollapsedCategorical::predictive_log_weight(const SufficientStats& stats,
                                                   Index record, Index cluster) const {
  const double size = stats.size(cluster);
  if (size == 0.0) return new_cluster_log_weight(record);
  auto row = table_->row(record);
  double lw = 0.0;
  for (Index f = 0; f < row.size(); ++f) {
    const double delta = prior_.delta_for(f);
    const double n = stats.count(cluster, f, row[f]);
    lw += std::log(delta * prior_.gamma[f][row[f]] + n) - std::log(delta + size);
  }
  return lw;
}

double CollapsedCategorical::new_cluster_log_weight(Index record) const {
  auto row = table_->row(record);
  double lw = 0.0;
  for (Index f = 0; f < row.size(); ++f) lw += log_gamma_[f][row[f]];
  return lw;
}

double CollapsedCategorical::cluster_log_ml(const SufficientStats& stats, Index cluster,
                                            Index field, double delta) const {
  const auto cell = stats.counts(cluster, field);
  const double size = stats.size(cluster);
  if (size == 1.0) return log_gamma_[field][cell.front().category];
  double lp = std::lgamma(delta) - std::lgamma(delta + size);
  for (const auto& e : cell) {
    const double a = delta * prior_.gamma[field][e.category];
    lp += std::lgamma(a + e.count) - std::lgamma(a);
  }
  return lp;
}

double CollapsedCategorical::log_likelihood(const Partition& p, const SufficientStats& stats,
                                            std::optional<Index> field) const {
  double ll = 0.0;
  const Index f0 = field ? *field : 0;
  const Index f1 = field ? *field + 1 : table_->num_fields();
  for (Index c : p.clusters()) {
    for (Index f = f0; f < f1; ++f) ll += cluster_log_ml(stats, c, f, prior_.delta_for(f));
  }
  return ll;
}

double CollapsedCategorical::log_likelihood_with_delta(const Partition& p,
                                                       const SufficientStats& stats,
                                                       double delta,
                                                       std::optional<Index> field) const {
  double ll = 0.0;
  const Index f0 = field ? *field : 0;
  const Index f1 = field ? *field + 1 : table_->num_fields();
  for (Index c : p.clusters()) {
    for (Index f = f0; f < f1; ++f) ll += cluster_log_ml(stats, c, f, delta);
  }
  return ll;
}

// --- delta conditional --------------------------------------------------------

namespace {

template <typename PerCell>
void for_each_cluster_field(const Partition& p, const RecordTable& records, bool tied,
                            Index field, PerCell&& fn) {
  const Index f0 = tied ? 0 : field;
  const Index f1 = tied ? records.num_fields() : field + 1;
  for (Index c : p.clusters()) {
    auto members = p.members(c);
    for (Index f = f0; f < f1; ++f) {
      std::unordered_map<Category, std::uint32_t> counts;
      for (Index n : members) ++counts[records.value(n, f)];
      fn(f, counts, members.size());
    }
  }
}

}  // namespace

double delta_log_cond(double delta, const Partition& p, const RecordTable& records,
                      std::span<const std::vector<double>> gamma, bool tied, Index field) {
  if (!(delta > 0.0)) throw std::domain_error("delta_log_cond: delta must be positive");
  if (p.size() != records.num_records()) {
    throw std::invalid_argument("delta_log_cond: partition and records differ in N");
  }
  double lp = -delta;  // Gam(1, 1)
  for_each_cluster_field(p, records, tied, field,
                         [&](Index f, const auto& counts, Index size) {
                           lp += std::lgamma(delta) - std::lgamma(delta + size);
                           for (const auto& [v, n] : counts) {
                             const double a = delta * gamma[f][v];
                             lp += std::lgamma(a + n) - std::lgamma(a);
                           }
                         });
  return lp;
}

double delta_log_cond_derivative(double delta, const Partition& p,
                                 const RecordTable& records,
                                 std::span<const std::vector<double>> gamma, bool tied,
                                 Index field) {
  double d = -1.0;
  for_each_cluster_field(p, records, tied, field,
                         [&](Index f, const auto& counts, Index size) {
                           d += digamma(delta) - digamma(delta + size);
                           for (const auto& [v, n] : counts) {
                             const double g = gamma[f][v];
                             d += g * (digamma(delta * g + n) - digamma(delta * g));
                           }
                         });
  return d;
}

}  // namespace kolchin
