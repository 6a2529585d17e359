#include "adafilter/model_io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "adafilter/error.hpp"

namespace adafilter {

namespace {

using nlohmann::json;

constexpr double kRowTolerance = 1e-12;
constexpr double kMassTolerance = 1e-9;

class Collector {
 public:
  void add(std::string pointer, std::string message) {
    issues.push_back({std::move(pointer), std::move(message)});
  }
  std::vector<ValidationIssue> issues;
};

std::string at(const std::string& base, std::size_t i) { return base + "/" + std::to_string(i); }

bool read_number(const json& node, const std::string& pointer, Collector& out, double& value) {
  if (!node.is_number()) {
    out.add(pointer, "expected a number");
    return false;
  }
  value = node.get<double>();
  if (!std::isfinite(value)) {
    out.add(pointer, "number is not finite");
    return false;
  }
  return true;
}

std::optional<std::vector<double>> read_vector(const json& node, const std::string& pointer,
                                               Collector& out) {
  if (!node.is_array()) {
    out.add(pointer, "expected an array of numbers");
    return std::nullopt;
  }
  std::vector<double> v;
  bool ok = true;
  for (std::size_t i = 0; i < node.size(); ++i) {
    double x = 0.0;
    if (read_number(node[i], at(pointer, i), out, x)) {
      v.push_back(x);
    } else {
      ok = false;
    }
  }
  if (!ok) return std::nullopt;
  return v;
}

// Checks shape, sign and row sums; reports every offending row.
std::optional<Matrix> read_matrix(const json& node, const std::string& pointer, std::size_t n,
                                  bool stochastic, Collector& out) {
  if (!node.is_array() || node.size() != n) {
    out.add(pointer, "expected " + std::to_string(n) + " rows");
    return std::nullopt;
  }
  Matrix m(n, n);
  bool ok = true;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string row_ptr = at(pointer, i);
    const auto row = read_vector(node[i], row_ptr, out);
    if (!row) {
      ok = false;
      continue;
    }
    if (row->size() != n) {
      out.add(row_ptr, "row " + std::to_string(i) + " has " + std::to_string(row->size()) +
                           " entries, expected " + std::to_string(n));
      ok = false;
      continue;
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      m(i, j) = (*row)[j];
      sum += (*row)[j];
      if (stochastic && (*row)[j] < 0.0) {
        out.add(at(row_ptr, j), "negative transition probability");
        ok = false;
      }
    }
    if (stochastic && std::abs(sum - 1.0) > kRowTolerance) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "row " << i << " is not stochastic: sums to " << sum;
      out.add(row_ptr, msg.str());
      ok = false;
    }
  }
  if (!ok) return std::nullopt;
  return m;
}

std::optional<DiscreteMeasure> read_distribution(const json& root, const char* key, std::size_t n,
                                                 Collector& out) {
  const std::string pointer = std::string("/") + key;
  if (!root.contains(key) || (root[key].is_string() && root[key] == "uniform")) {
    return DiscreteMeasure::uniform(n);
  }
  const auto w = read_vector(root[key], pointer, out);
  if (!w) return std::nullopt;
  if (w->size() != n) {
    out.add(pointer, "expected " + std::to_string(n) + " weights, got " + std::to_string(w->size()));
    return std::nullopt;
  }
  double sum = 0.0;
  bool ok = true;
  for (std::size_t i = 0; i < n; ++i) {
    sum += (*w)[i];
    if ((*w)[i] < 0.0) {
      out.add(at(pointer, i), "negative weight");
      ok = false;
    }
  }
  if (ok && std::abs(sum - 1.0) > kMassTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "weights sum to " << sum << ", expected 1";
    out.add(pointer, msg.str());
    ok = false;
  }
  if (!ok) return std::nullopt;
  return DiscreteMeasure::probability(*w);
}

std::optional<KernelFamily> read_template(const json& node, const std::vector<Param>& grid,
                                          std::size_t n, Collector& out) {
  const std::string pointer = "/kernel_template";
  if (!node.is_object() || !node.contains("name") || !node["name"].is_string()) {
    out.add(pointer, "kernel_template needs a string \"name\"");
    return std::nullopt;
  }
  const std::string name = node["name"].get<std::string>();
  const std::size_t dim = grid.empty() ? 0 : grid.front().size();
  if (name == "symmetric_flip") {
    if (n != 2 || dim != 1) {
      out.add(pointer + "/name", "symmetric_flip needs 2 states and a scalar parameter");
      return std::nullopt;
    }
    Matrix base = Matrix::from_rows({{1.0, 0.0}, {0.0, 1.0}});
    Matrix slope = Matrix::from_rows({{-1.0, 1.0}, {1.0, -1.0}});
    return KernelFamily::affine(grid, base, {slope});
  }
  if (name == "affine") {
    if (!node.contains("base")) out.add(pointer + "/base", "affine template needs \"base\"");
    if (!node.contains("slopes") || !node["slopes"].is_array()) {
      out.add(pointer + "/slopes", "affine template needs an array \"slopes\"");
    }
    if (!node.contains("base") || !node.contains("slopes") || !node["slopes"].is_array()) {
      return std::nullopt;
    }
    auto base = read_matrix(node["base"], pointer + "/base", n, false, out);
    if (node["slopes"].size() != dim) {
      out.add(pointer + "/slopes", "expected one slope per parameter coordinate (" +
                                       std::to_string(dim) + ")");
      return std::nullopt;
    }
    std::vector<Matrix> slopes;
    bool ok = base.has_value();
    for (std::size_t d = 0; d < dim; ++d) {
      auto s = read_matrix(node["slopes"][d], at(pointer + "/slopes", d), n, false, out);
      if (s) {
        slopes.push_back(std::move(*s));
      } else {
        ok = false;
      }
    }
    if (!ok) return std::nullopt;
    return KernelFamily::affine(grid, std::move(*base), std::move(slopes));
  }
  out.add(pointer + "/name", "unknown kernel template \"" + name + "\"");
  return std::nullopt;
}

}  // namespace

ModelLoadResult parse_model(const std::string& json_text) {
  ModelLoadResult result;
  Collector out;
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    result.issues.push_back({"", std::string("malformed JSON: ") + e.what()});
    return result;
  }
  if (!root.is_object()) {
    result.issues.push_back({"", "model spec must be a JSON object"});
    return result;
  }

  std::size_t n = 0;
  if (!root.contains("states") || !root["states"].is_number_integer() ||
      root["states"].get<long long>() < 1) {
    out.add("/states", "expected a positive integer");
  } else {
    n = root["states"].get<std::size_t>();
  }

  std::optional<std::vector<double>> h;
  if (!root.contains("h")) {
    out.add("/h", "missing observation map");
  } else {
    h = read_vector(root["h"], "/h", out);
    if (h && n > 0 && h->size() != n) {
      out.add("/h", "expected one value per state (" + std::to_string(n) + ")");
      h.reset();
    }
  }

  double sigma = 0.0;
  if (!root.contains("sigma")) {
    out.add("/sigma", "missing noise level");
  } else if (read_number(root["sigma"], "/sigma", out, sigma) && !(sigma > 0.0)) {
    out.add("/sigma", "sigma must be positive");
  }

  std::vector<Param> grid;
  bool grid_ok = false;
  if (!root.contains("param_grid") || !root["param_grid"].is_array() || root["param_grid"].empty()) {
    out.add("/param_grid", "expected a non-empty array of parameter points");
  } else {
    grid_ok = true;
    const json& g = root["param_grid"];
    for (std::size_t i = 0; i < g.size(); ++i) {
      // A bare number is a one-dimensional point.
      std::optional<Param> p;
      if (g[i].is_number()) {
        double v = 0.0;
        if (read_number(g[i], at("/param_grid", i), out, v)) p = Param{v};
      } else {
        p = read_vector(g[i], at("/param_grid", i), out);
      }
      if (!p || p->empty()) {
        if (p) out.add(at("/param_grid", i), "empty parameter point");
        grid_ok = false;
        continue;
      }
      if (!grid.empty() && p->size() != grid.front().size()) {
        out.add(at("/param_grid", i), "parameter dimension differs from the first point");
        grid_ok = false;
        continue;
      }
      grid.push_back(std::move(*p));
    }
    std::set<Param> seen;
    for (std::size_t i = 0; i < grid.size() && grid_ok; ++i) {
      if (!seen.insert(grid[i]).second) {
        out.add(at("/param_grid", i), "duplicate grid point; grid points must be distinct");
        grid_ok = false;
      }
    }
  }

  std::optional<KernelFamily> family;
  const bool has_kernels = root.contains("kernels");
  const bool has_template = root.contains("kernel_template");
  if (has_kernels == has_template) {
    out.add("", "exactly one of \"kernels\" and \"kernel_template\" is required");
  } else if (n > 0 && grid_ok) {
    if (has_kernels) {
      const json& ks = root["kernels"];
      if (!ks.is_array() || ks.size() != grid.size()) {
        out.add("/kernels", "expected one kernel per grid point (" + std::to_string(grid.size()) + ")");
      } else {
        std::vector<FiniteKernel> kernels;
        bool ok = true;
        for (std::size_t i = 0; i < ks.size(); ++i) {
          auto m = read_matrix(ks[i], at("/kernels", i), n, true, out);
          if (m) {
            kernels.emplace_back(std::move(*m));
          } else {
            ok = false;
          }
        }
        if (ok) family.emplace(grid, std::move(kernels));
      }
    } else {
      try {
        family = read_template(root["kernel_template"], grid, n, out);
      } catch (const Error& e) {
        // The template produced a non-stochastic kernel at some grid point.
        out.add("/kernel_template", e.what());
      }
    }
  }

  std::optional<DiscreteMeasure> prior;
  if (grid_ok) prior = read_distribution(root, "prior", grid.size(), out);
  std::optional<DiscreteMeasure> initial;
  if (n > 0) initial = read_distribution(root, "initial", n, out);

  if (root.contains("true_param_index")) {
    const json& t = root["true_param_index"];
    if (!t.is_number_integer() || t.get<long long>() < 0 ||
        (grid_ok && t.get<std::size_t>() >= grid.size())) {
      out.add("/true_param_index", "expected a grid index");
    } else {
      result.true_param_index = t.get<std::size_t>();
    }
  }

  result.issues = std::move(out.issues);
  if (!result.issues.empty() || !family || !h || !prior || !initial || !(sigma > 0.0)) {
    return result;
  }
  try {
    result.model.emplace(std::move(*family), std::move(*prior), ObservationModel(std::move(*h), sigma),
                         std::move(*initial));
  } catch (const Error& e) {
    result.issues.push_back({"", e.what()});
  }
  return result;
}

ModelLoadResult validate_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    ModelLoadResult result;
    result.issues.push_back({"", "cannot open model file " + path.string()});
    return result;
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_model(buffer.str());
}

}  // namespace adafilter
