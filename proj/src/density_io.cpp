#include "genlabel/density.hpp"

namespace genlabel {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

int class_count(const GenerativeModel& model) {
  return std::visit([](const auto& m) { return m.class_count(); }, model);
}

Eigen::Index dim(const GenerativeModel& model) {
  return std::visit([](const auto& m) { return m.dim(); }, model);
}

std::string kind_name(const GenerativeModel& model) {
  return std::holds_alternative<GaussianModel<double>>(model) ? "gm" : "kde";
}

double log_likelihood(const GenerativeModel& model, const VectorXd& x, int c) {
  if (!x.allFinite()) throw DataError("log_likelihood input is not finite");
  return std::visit([&](const auto& m) { return m.log_likelihood(x, c); }, model);
}

VectorXd log_likelihoods(const GenerativeModel& model, const VectorXd& x, bool posterior) {
  const int k = class_count(model);
  VectorXd out(k);
  for (int c = 0; c < k; ++c) out[c] = log_likelihood(model, x, c);
  if (posterior) {
    std::visit(Overloaded{[&](const GaussianModel<double>& m) {
                            for (int c = 0; c < k; ++c) out[c] += std::log(m.priors[static_cast<size_t>(c)]);
                          },
                          [&](const KdeModel<double>& m) {
                            double total = 0.0;
                            for (const auto& b : m.banks) total += static_cast<double>(b.rows());
                            for (int c = 0; c < k; ++c)
                              out[c] += std::log(static_cast<double>(m.banks[static_cast<size_t>(c)].rows()) / total);
                          }},
               model);
  }
  return out;
}

SoftLabel<double> genlabel(const GenerativeModel& model, const VectorXd& x, bool posterior) {
  return {softmax(log_likelihoods(model, x, posterior))};
}

std::vector<int> generative_predict(const GenerativeModel& model, const MatrixXd& x,
                                    bool posterior) {
  std::vector<int> out(static_cast<size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    out[static_cast<size_t>(i)] =
        static_cast<int>(argmax(log_likelihoods(model, x.row(i).transpose(), posterior)));
  return out;
}

double generative_classifier_accuracy(const GenerativeModel& model, const Dataset& ds,
                                      bool posterior) {
  if (class_count(model) != ds.class_count) throw ConfigError("model/dataset class count mismatch");
  const auto pred = generative_predict(model, ds.features, posterior);
  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < ds.size(); ++i)
    if (pred[static_cast<size_t>(i)] == ds.label_of(i)) ++correct;
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

Json to_json(const GenerativeModel& model) {
  return std::visit(
      Overloaded{[](const GaussianModel<double>& m) {
                   Json j;
                   j["kind"] = "gm";
                   j["class_count"] = m.class_count();
                   j["dim"] = m.dim();
                   Json classes = Json::array();
                   for (int c = 0; c < m.class_count(); ++c) {
                     const auto ci = static_cast<size_t>(c);
                     Json e;
                     e["mean"] = vector_to_json(m.means[ci]);
                     e["covariance"] = matrix_to_json(m.covariances[ci]);
                     e["prior"] = m.priors[ci];
                     e["eps_reg"] = m.eps_reg[ci];
                     classes.push_back(std::move(e));
                   }
                   j["classes"] = std::move(classes);
                   return j;
                 },
                 [](const KdeModel<double>& m) {
                   Json j;
                   j["kind"] = "kde";
                   j["class_count"] = m.class_count();
                   j["dim"] = m.dim();
                   j["diagonal"] = m.diagonal;
                   Json classes = Json::array();
                   for (int c = 0; c < m.class_count(); ++c) {
                     const auto ci = static_cast<size_t>(c);
                     Json e;
                     e["bandwidth"] = m.bandwidths[ci];
                     e["kernel_covariance"] = matrix_to_json(m.kernel_cov[ci]);
                     e["bank"] = matrix_to_json(m.banks[ci]);
                     classes.push_back(std::move(e));
                   }
                   j["classes"] = std::move(classes);
                   return j;
                 }},
      model);
}

GenerativeModel generative_model_from_json(const Json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "gm") {
      GaussianModel<double> m;
      for (const auto& e : j.at("classes")) {
        m.means.push_back(vector_from_json(e.at("mean")));
        m.covariances.push_back(matrix_from_json(e.at("covariance")));
        m.priors.push_back(e.at("prior").get<double>());
        m.eps_reg.push_back(e.value("eps_reg", 0.0));
      }
      m.factorize();
      return m;
    }
    if (kind == "kde") {
      KdeModel<double> m;
      m.diagonal = j.value("diagonal", false);
      for (const auto& e : j.at("classes")) {
        m.bandwidths.push_back(e.at("bandwidth").get<double>());
        m.kernel_cov.push_back(matrix_from_json(e.at("kernel_covariance")));
        m.banks.push_back(matrix_from_json(e.at("bank")));
      }
      m.factorize();
      return m;
    }
    throw ConfigError("unknown generative model kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed generative model JSON: ") + e.what());
  }
}

}  // namespace genlabel
