#include "psl/hps/agent.hpp"

#include <cmath>

namespace psl::hps {

namespace {
constexpr double kHalfLog2Pi = 0.9189385332046727;
}

HpsAgent make_hps_agent(const mlps::SkillLibrary& lib, const Vec& obs_scale,
                        const std::vector<long>& hidden, Rng& rng,
                        bool separate_critics) {
  validate_library(lib);
  HpsAgent a;
  a.num_skills = lib.num_skills();
  a.max_dz = lib.max_dz();
  a.obs_dim = static_cast<int>(obs_scale.size());
  a.obs_scale = obs_scale;
  a.separate_critics = separate_critics;

  a.bounds_lo = Mat::Constant(a.num_skills, std::max(a.max_dz, 1), -1.0);
  a.bounds_hi = Mat::Constant(a.num_skills, std::max(a.max_dz, 1), 1.0);
  for (int k = 0; k < a.num_skills; ++k) {
    const auto& e = lib.at(k);
    a.dz.push_back(e.d_z);
    for (int i = 0; i < e.d_z; ++i) {
      a.bounds_lo(k, i) = e.bounds_lo[i];
      a.bounds_hi(k, i) = e.bounds_hi[i];
    }
  }

  const long head_dz = std::max(a.max_dz, 1);
  a.theta_d = nn::make_mlp("theta_d", a.obs_dim, hidden, a.num_skills,
                           nn::Activation::Relu, rng, 0.01);
  a.theta_c = nn::make_mlp("theta_c", a.obs_dim + a.num_skills, hidden, 2 * head_dz,
                           nn::Activation::Relu, rng, 0.01);
  if (separate_critics) {
    a.q1 = nn::make_mlp("q_discrete", a.obs_dim + a.num_skills, hidden, 1,
                        nn::Activation::Relu, rng);
    a.q2 = nn::make_mlp("q_continuous", a.obs_dim + a.max_dz, hidden, 1,
                        nn::Activation::Relu, rng);
  } else {
    a.q1 = nn::make_mlp("q1", a.obs_dim + a.num_skills + a.max_dz, hidden, 1,
                        nn::Activation::Relu, rng);
    a.q2 = nn::make_mlp("q2", a.obs_dim + a.num_skills + a.max_dz, hidden, 1,
                        nn::Activation::Relu, rng);
  }
  a.value = nn::make_mlp("value", a.obs_dim, hidden, 1, nn::Activation::Relu, rng);
  a.value_target = a.value;
  a.value_target.for_each_param([](nn::Param& p) {
    p.m = Mat();
    p.v = Mat();
    p.step = 0;
  });
  return a;
}

Vec onehot(int k, int n) {
  Vec v = Vec::Zero(n);
  v[k] = 1.0;
  return v;
}

Vec normalized_obs(const HpsAgent& agent, const Vec& s) {
  if (s.size() != agent.obs_scale.size())
    throw std::invalid_argument("high-level observation dimension mismatch");
  return s.cwiseProduct(agent.obs_scale);
}

Vec pad_param(const HpsAgent& agent, const ParameterizedAction& a) {
  Vec z = Vec::Zero(agent.max_dz);
  z.head(a.skill_param.size()) = a.skill_param;
  return z;
}

namespace {

struct Head {
  Vec mean, log_std;
};

Head continuous_head(const HpsAgent& agent, const Vec& norm_s, const Vec& k_vec) {
  Vec in(norm_s.size() + k_vec.size());
  in << norm_s, k_vec;
  const Vec out = nn::mlp_eval(agent.theta_c, in);
  ++agent.continuous_forwards;
  const long d = out.size() / 2;
  Head h;
  h.mean = out.head(d);
  h.log_std = out.tail(d).array().max(nn::kLogStdMin).min(nn::kLogStdMax);
  return h;
}

}  // namespace

ContinuousSample sample_continuous(const HpsAgent& agent, const Vec& s, int k, Rng& rng,
                                   bool greedy) {
  if (k < 0 || k >= agent.num_skills) throw std::out_of_range("skill label out of range");
  const Vec norm_s = normalized_obs(agent, s);
  const Head h = continuous_head(agent, norm_s, onehot(k, agent.num_skills));

  ContinuousSample out;
  const int d = agent.dz[static_cast<std::size_t>(k)];
  out.pre_squash = h.mean;
  if (!greedy)
    out.pre_squash +=
        h.log_std.array().exp().matrix().cwiseProduct(
            nn::sample_standard_normal(h.mean.size(), rng));
  out.z = Vec(d);
  for (int i = 0; i < d; ++i) {
    const double half = 0.5 * (agent.bounds_hi(k, i) - agent.bounds_lo(k, i));
    const double mid = 0.5 * (agent.bounds_hi(k, i) + agent.bounds_lo(k, i));
    const double u = out.pre_squash[i];
    const double th = std::tanh(u);
    out.z[i] = mid + half * th;
    const double xi = (u - h.mean[i]) * std::exp(-h.log_std[i]);
    out.log_prob += -0.5 * xi * xi - h.log_std[i] - kHalfLog2Pi -
                    std::log(1.0 - th * th + nn::kSquashEps) - std::log(half);
  }
  return out;
}

double continuous_log_prob(const HpsAgent& agent, const Vec& s, int k,
                           const Vec& pre_squash) {
  const Vec norm_s = normalized_obs(agent, s);
  const Head h = continuous_head(agent, norm_s, onehot(k, agent.num_skills));
  double lp = 0.0;
  const int d = agent.dz[static_cast<std::size_t>(k)];
  for (int i = 0; i < d; ++i) {
    const double half = 0.5 * (agent.bounds_hi(k, i) - agent.bounds_lo(k, i));
    const double th = std::tanh(pre_squash[i]);
    const double xi = (pre_squash[i] - h.mean[i]) * std::exp(-h.log_std[i]);
    lp += -0.5 * xi * xi - h.log_std[i] - kHalfLog2Pi -
          std::log(1.0 - th * th + nn::kSquashEps) - std::log(half);
  }
  return lp;
}

ParameterizedAction select_action(const HpsAgent& agent, const Vec& s, Rng& rng,
                                  bool greedy) {
  const Vec norm_s = normalized_obs(agent, s);
  const Vec logits = nn::mlp_eval(agent.theta_d, norm_s);
  Eigen::Index k = 0;
  if (greedy) {
    logits.maxCoeff(&k);
  } else {
    nn::gumbel_softmax_sample(logits, agent.interact_temp, rng, true).maxCoeff(&k);
  }
  ParameterizedAction a;
  a.skill_label = static_cast<int>(k);
  a.skill_param = sample_continuous(agent, s, a.skill_label, rng, greedy).z;
  return a;
}

}  // namespace psl::hps
