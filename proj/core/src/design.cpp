#include "predcal/design.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

namespace predcal {

// ---- Term / ModelSpec ----

std::string Term::name() const {
  std::string out;
  for (std::size_t i = 0; i < factors.size(); ++i) {
    if (i > 0) out += ':';
    out += factors[i];
  }
  return out;
}

std::string ModelSpec::to_string() const {
  std::string out = response + "~";
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (i > 0) out += '+';
    out += "(1|" + terms[i].name() + ")";
  }
  return out;
}

// ---- formula parser ----

namespace {

class FormulaParser {
 public:
  explicit FormulaParser(const std::string& text) : text_(text) {}

  ModelSpec parse() {
    ModelSpec spec;
    spec.response = expect_name("response name");
    expect_char('~');
    spec.terms.push_back(parse_group());
    skip_ws();
    while (!at_end()) {
      expect_char('+');
      spec.terms.push_back(parse_group());
      skip_ws();
    }
    std::unordered_set<std::string> seen;
    for (const Term& t : spec.terms) {
      if (!seen.insert(t.name()).second) {
        fail(0, "duplicate term '" + t.name() + "'");
      }
      if (t.factors.size() == 2 && t.factors[0] == t.factors[1]) {
        fail(0, "interaction '" + t.name() + "' repeats a factor");
      }
    }
    return spec;
  }

 private:
  [[noreturn]] void fail(std::size_t at, const std::string& what) const {
    throw ValidationError("formula error at byte " + std::to_string(at) +
                          ": " + what + " in '" + text_ + "'");
  }

  bool at_end() const { return pos_ >= text_.size(); }

  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  void expect_char(char c) {
    skip_ws();
    if (at_end() || text_[pos_] != c) {
      fail(pos_, std::string("expected '") + c + "'");
    }
    ++pos_;
  }

  static bool name_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
  }
  static bool name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
  }

  std::string expect_name(const std::string& what) {
    skip_ws();
    std::size_t start = pos_;
    if (at_end() || !name_start(text_[pos_])) fail(pos_, "expected " + what);
    while (!at_end() && name_char(text_[pos_])) ++pos_;
    return text_.substr(start, pos_ - start);
  }

  Term parse_group() {
    expect_char('(');
    skip_ws();
    std::size_t inner = pos_;
    // The slot before '|' must be the literal intercept "1".
    if (at_end() || text_[pos_] != '1') {
      fail(inner, "only random intercepts supported");
    }
    ++pos_;
    skip_ws();
    if (at_end() || text_[pos_] != '|') {
      fail(inner, "only random intercepts supported");
    }
    ++pos_;
    Term term;
    term.factors.push_back(expect_name("factor name"));
    skip_ws();
    if (!at_end() && text_[pos_] == ':') {
      ++pos_;
      term.factors.push_back(expect_name("factor name"));
      skip_ws();
      if (!at_end() && text_[pos_] == ':') {
        fail(pos_, "interactions may combine at most two factors");
      }
    }
    expect_char(')');
    return term;
  }

  const std::string& text_;
  std::size_t pos_ = 0;
};

}  // namespace

ModelSpec parse_formula(const std::string& text) {
  return FormulaParser(text).parse();
}

// ---- DesignMatrices ----

DesignMatrices::DesignMatrices(std::vector<TermMatrix> terms)
    : terms_(std::move(terms)) {
  if (terms_.empty()) {
    throw ValidationError("a design needs at least one term matrix");
  }
  rows_ = terms_.front().Z.rows();
  if (rows_ < 1) throw ValidationError("design matrices need at least one row");
  std::unordered_set<std::string> names;
  for (const TermMatrix& t : terms_) {
    if (t.name.empty()) throw ValidationError("term matrix without a name");
    if (!names.insert(t.name).second) {
      throw ValidationError("duplicate term matrix '" + t.name + "'");
    }
    if (t.Z.rows() != rows_) {
      throw ValidationError("term '" + t.name +
                            "' disagrees with the design row count");
    }
    if (t.Z.cols() < 1) {
      throw ValidationError("term '" + t.name + "' has no columns");
    }
    if (!t.level_labels.empty() &&
        static_cast<std::int64_t>(t.level_labels.size()) != t.Z.cols()) {
      throw ValidationError("term '" + t.name +
                            "' has a label count different from its columns");
    }
    for (std::int64_t i = 0; i < t.Z.rows(); ++i) {
      double sum = 0.0;
      for (std::int64_t j = 0; j < t.Z.cols(); ++j) {
        double v = t.Z(i, j);
        if (v != 0.0 && v != 1.0) {
          throw ValidationError("term '" + t.name + "' row " +
                                std::to_string(i + 1) +
                                " has an entry other than 0 or 1");
        }
        sum += v;
      }
      if (sum != 1.0) {
        throw ValidationError("term '" + t.name + "' row " +
                              std::to_string(i + 1) +
                              " must contain exactly one 1");
      }
    }
  }
}

const TermMatrix& DesignMatrices::term(const std::string& name) const {
  for (const TermMatrix& t : terms_) {
    if (t.name == name) return t;
  }
  throw ValidationError("design has no term named '" + name + "'");
}

// ---- building from data ----

namespace {

std::vector<std::string> term_row_labels(const MixedModelData& data,
                                         const Term& term) {
  const std::int64_t n = data.row_count();
  std::vector<std::string> labels(n);
  if (term.factors.size() == 1) {
    labels = data.factor(term.factors[0]).levels;
  } else {
    const auto& f1 = data.factor(term.factors[0]).levels;
    const auto& f2 = data.factor(term.factors[1]).levels;
    for (std::int64_t i = 0; i < n; ++i) {
      if (f1[i].find(':') != std::string::npos ||
          f2[i].find(':') != std::string::npos) {
        throw ValidationError(
            "factor levels used in interaction '" + term.name() +
            "' must not contain ':' (clashes with the level separator)");
      }
      labels[i] = f1[i] + ":" + f2[i];
    }
  }
  return labels;
}

}  // namespace

DesignMatrices build_design_matrices(const MixedModelData& data,
                                     const ModelSpec& spec) {
  if (spec.terms.empty()) {
    throw ValidationError("model needs at least one random-intercept term");
  }
  const std::int64_t n = data.row_count();
  std::vector<TermMatrix> out;
  out.reserve(spec.terms.size());
  for (const Term& term : spec.terms) {
    std::vector<std::string> labels = term_row_labels(data, term);
    std::unordered_map<std::string, std::int64_t> index;
    std::vector<std::string> order;
    for (const std::string& lv : labels) {
      if (index.emplace(lv, static_cast<std::int64_t>(order.size())).second) {
        order.push_back(lv);
      }
    }
    Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(n, order.size());
    for (std::int64_t i = 0; i < n; ++i) {
      Z(i, index.at(labels[i])) = 1.0;
    }
    out.push_back(TermMatrix{term.name(), std::move(Z), std::move(order)});
  }
  return DesignMatrices(std::move(out));
}

DesignMatrices subset_rows(const DesignMatrices& dm,
                           const std::vector<std::int64_t>& futvec) {
  if (futvec.empty()) throw ValidationError("futvec must not be empty");
  std::unordered_set<std::int64_t> seen;
  for (std::int64_t r : futvec) {
    if (r < 1 || r > dm.row_count()) {
      throw ValidationError("futvec entry " + std::to_string(r) +
                            " is outside 1.." + std::to_string(dm.row_count()));
    }
    if (!seen.insert(r).second) {
      throw ValidationError("futvec entry " + std::to_string(r) +
                            " appears more than once");
    }
  }
  std::vector<TermMatrix> out;
  out.reserve(dm.terms().size());
  for (const TermMatrix& t : dm.terms()) {
    Eigen::MatrixXd Z(futvec.size(), t.Z.cols());
    for (std::size_t i = 0; i < futvec.size(); ++i) {
      Z.row(i) = t.Z.row(futvec[i] - 1);
    }
    out.push_back(TermMatrix{t.name, std::move(Z), t.level_labels});
  }
  return DesignMatrices(std::move(out));
}

// ---- futmat-list JSON ----

namespace {

using nlohmann::json;

Eigen::MatrixXd matrix_from_json(const json& jm, const std::string& name) {
  if (!jm.is_array() || jm.empty()) {
    throw ValidationError("futmat list: term '" + name +
                          "' needs a non-empty 'matrix' array of rows");
  }
  const std::size_t rows = jm.size();
  std::size_t cols = 0;
  Eigen::MatrixXd Z;
  for (std::size_t i = 0; i < rows; ++i) {
    const json& jr = jm[i];
    if (!jr.is_array() || jr.empty()) {
      throw ValidationError("futmat list: term '" + name + "' row " +
                            std::to_string(i + 1) + " is not a non-empty array");
    }
    if (i == 0) {
      cols = jr.size();
      Z.resize(rows, cols);
    } else if (jr.size() != cols) {
      throw ValidationError("futmat list: term '" + name + "' row " +
                            std::to_string(i + 1) + " has a ragged width");
    }
    for (std::size_t j = 0; j < cols; ++j) {
      if (!jr[j].is_number()) {
        throw ValidationError("futmat list: term '" + name + "' row " +
                              std::to_string(i + 1) + " has a non-numeric entry");
      }
      Z(i, j) = jr[j].get<double>();
    }
  }
  return Z;
}

}  // namespace

DesignMatrices load_futmat_list(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("futmat list: invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("terms") || !doc["terms"].is_array() ||
      doc["terms"].empty()) {
    throw ValidationError(
        "futmat list: document must be {\"terms\":[...]} with at least one term");
  }
  std::vector<TermMatrix> terms;
  for (const json& jt : doc["terms"]) {
    if (!jt.is_object() || !jt.contains("name") || !jt["name"].is_string() ||
        !jt.contains("matrix")) {
      throw ValidationError(
          "futmat list: each term needs a string 'name' and a 'matrix'");
    }
    std::string name = jt["name"].get<std::string>();
    Eigen::MatrixXd Z = matrix_from_json(jt["matrix"], name);
    if (name == "Residual") {
      // The residual is implicit; accept an explicit identity and drop it.
      if (Z.rows() != Z.cols() ||
          !Z.isApprox(Eigen::MatrixXd::Identity(Z.rows(), Z.cols()))) {
        throw ValidationError(
            "futmat list: a 'Residual' entry must be the identity matrix "
            "(the residual term is implicit)");
      }
      continue;
    }
    terms.push_back(TermMatrix{std::move(name), std::move(Z), {}});
  }
  if (terms.empty()) {
    throw ValidationError("futmat list: no non-residual terms present");
  }
  return DesignMatrices(std::move(terms));
}

DesignMatrices load_futmat_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open futmat list file '" + path + "'");
  return load_futmat_list(in);
}

void save_futmat_list(const DesignMatrices& dm, std::ostream& out) {
  json doc;
  doc["terms"] = json::array();
  for (const TermMatrix& t : dm.terms()) {
    json jm = json::array();
    for (std::int64_t i = 0; i < t.Z.rows(); ++i) {
      json jr = json::array();
      for (std::int64_t j = 0; j < t.Z.cols(); ++j) {
        jr.push_back(static_cast<int>(t.Z(i, j)));
      }
      jm.push_back(std::move(jr));
    }
    doc["terms"].push_back(json{{"name", t.name}, {"matrix", std::move(jm)}});
  }
  out << doc.dump(2) << '\n';
}

// ---- future designs ----

std::int64_t future_slot_count(const FutureDesign& fd) {
  return std::visit(
      [](const auto& v) -> std::int64_t {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, FutureUnstructured>) {
          return v.m;
        } else if constexpr (std::is_same_v<T, FutureRowSubset>) {
          return static_cast<std::int64_t>(v.rows.size());
        } else if constexpr (std::is_same_v<T, FutureMatrices>) {
          return v.design.row_count();
        } else if constexpr (std::is_same_v<T, FutureClusterSizes>) {
          return static_cast<std::int64_t>(v.sizes.size());
        } else {
          return v.m;
        }
      },
      fd);
}

}  // namespace predcal
