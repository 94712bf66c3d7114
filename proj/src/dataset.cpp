#include "mole/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>

namespace mole {
namespace {

void put_double(std::ostream& os, double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  os.write(buf, p - buf);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

double parse_double(const std::string& s, long lineno) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw SchemaError("dataset line " + std::to_string(lineno) + ": bad number '" + s + "'");
  return v;
}

std::string sanitize_tag(std::string tag) {
  std::replace(tag.begin(), tag.end(), ',', ';');
  std::replace(tag.begin(), tag.end(), '\n', ' ');
  return tag;
}

}  // namespace

void Dataset::append(Trajectory traj) {
  if (traj.states.rows() != state_dim_ || traj.next_states.rows() != state_dim_ ||
      traj.actions.rows() != action_dim_)
    throw ArgumentError("Dataset: trajectory dimensions do not match");
  if (traj.actions.cols() != traj.states.cols() || traj.next_states.cols() != traj.states.cols())
    throw ArgumentError("Dataset: trajectory column counts differ");
  traj.task_tag = sanitize_tag(std::move(traj.task_tag));
  trajs_.push_back(std::move(traj));
}

long Dataset::num_transitions() const {
  long n = 0;
  for (const auto& t : trajs_) n += t.size();
  return n;
}

Dataset Dataset::up_to_iteration(int max_iteration) const {
  Dataset d(state_dim_, action_dim_);
  for (const auto& t : trajs_)
    if (t.iteration <= max_iteration) d.trajs_.push_back(t);
  return d;
}

Dataset Dataset::subset(double fraction, std::uint64_t seed) const {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ArgumentError("Dataset::subset: fraction must lie in (0,1]");
  const auto n = trajs_.size();
  const auto keep = static_cast<std::size_t>(std::ceil(fraction * double(n) - 1e-9));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(keep);
  std::sort(idx.begin(), idx.end());
  Dataset d(state_dim_, action_dim_);
  for (auto i : idx) d.trajs_.push_back(trajs_[i]);
  return d;
}

Normalizer Dataset::fit_normalizer() const {
  const long n = num_transitions();
  if (n == 0) return Normalizer::identity(state_dim_ + action_dim_, state_dim_);
  Eigen::MatrixXd x(state_dim_ + action_dim_, n), d(state_dim_, n);
  long c = 0;
  for (const auto& t : trajs_) {
    x.block(0, c, state_dim_, t.size()) = t.states;
    x.block(state_dim_, c, action_dim_, t.size()) = t.actions;
    d.block(0, c, state_dim_, t.size()) = t.next_states - t.states;
    c += t.size();
  }
  return Normalizer::fit(x, d);
}

void Dataset::write(std::ostream& os) const {
  os << "# mole-dataset v1 state_dim=" << state_dim_ << " action_dim=" << action_dim_ << '\n';
  os << "episode,iteration,env,task";
  for (int i = 0; i < state_dim_; ++i) os << ",s" << i;
  for (int i = 0; i < action_dim_; ++i) os << ",a" << i;
  for (int i = 0; i < state_dim_; ++i) os << ",next" << i;
  os << '\n';
  for (const auto& t : trajs_) {
    for (long j = 0; j < t.size(); ++j) {
      os << t.episode << ',' << t.iteration << ',' << t.env << ',' << t.task_tag;
      for (int i = 0; i < state_dim_; ++i) os << ',', put_double(os, t.states(i, j));
      for (int i = 0; i < action_dim_; ++i) os << ',', put_double(os, t.actions(i, j));
      for (int i = 0; i < state_dim_; ++i) os << ',', put_double(os, t.next_states(i, j));
      os << '\n';
    }
  }
}

Dataset Dataset::read(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("# mole-dataset v1", 0) != 0)
    throw SchemaError("dataset: missing or unsupported header");
  int ds = -1, da = -1;
  {
    std::istringstream hs(line);
    std::string tok;
    while (hs >> tok) {
      if (tok.rfind("state_dim=", 0) == 0) ds = std::stoi(tok.substr(10));
      if (tok.rfind("action_dim=", 0) == 0) da = std::stoi(tok.substr(11));
    }
  }
  if (ds < 1 || da < 1) throw SchemaError("dataset: header lacks dimensions");
  std::getline(is, line);  // column names

  Dataset out(ds, da);
  struct Pending {
    Trajectory traj;
    std::vector<Eigen::VectorXd> s, a, n;
  };
  std::optional<Pending> cur;
  auto flush = [&] {
    if (!cur) return;
    const auto T = static_cast<Eigen::Index>(cur->s.size());
    cur->traj.states.resize(ds, T);
    cur->traj.actions.resize(da, T);
    cur->traj.next_states.resize(ds, T);
    for (Eigen::Index j = 0; j < T; ++j) {
      cur->traj.states.col(j) = cur->s[j];
      cur->traj.actions.col(j) = cur->a[j];
      cur->traj.next_states.col(j) = cur->n[j];
    }
    out.append(std::move(cur->traj));
    cur.reset();
  };
  long lineno = 2;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != static_cast<std::size_t>(4 + 2 * ds + da))
      throw SchemaError("dataset line " + std::to_string(lineno) + ": wrong column count");
    const long ep = std::stol(f[0]);
    if (!cur || cur->traj.episode != ep) {
      flush();
      cur.emplace();
      cur->traj.episode = ep;
      cur->traj.iteration = std::stoi(f[1]);
      cur->traj.env = f[2];
      cur->traj.task_tag = f[3];
    }
    Eigen::VectorXd s(ds), a(da), n(ds);
    for (int i = 0; i < ds; ++i) s[i] = parse_double(f[4 + i], lineno);
    for (int i = 0; i < da; ++i) a[i] = parse_double(f[4 + ds + i], lineno);
    for (int i = 0; i < ds; ++i) n[i] = parse_double(f[4 + ds + da + i], lineno);
    cur->s.push_back(s);
    cur->a.push_back(a);
    cur->n.push_back(n);
  }
  flush();
  return out;
}

void Dataset::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open dataset for writing: " + path);
  write(os);
}

Dataset Dataset::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("missing dataset: " + path);
  return read(is);
}

}  // namespace mole
