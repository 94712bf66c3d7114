#include "mole/schedule.hpp"

#include <cctype>
#include <charconv>
#include <map>

namespace mole {

long TaskSchedule::total_duration() const {
  long n = 0;
  for (const auto& s : segments) n += s.duration;
  return n;
}

bool TaskSchedule::gradual() const {
  for (const auto& s : segments)
    if (s.ramp_to) return true;
  return false;
}

std::size_t TaskSchedule::segment_at(long t) const {
  if (t < 0) throw ArgumentError("schedule: negative time");
  long start = 0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (t < start + segments[i].duration) return i;
    start += segments[i].duration;
  }
  throw ArgumentError("schedule: time " + std::to_string(t) + " beyond schedule end");
}

TaskParams TaskSchedule::task_at(long t, const Environment& env) const {
  const std::size_t i = segment_at(t);
  const auto& seg = segments[i];
  if (!seg.ramp_to) return seg.task;
  long start = 0;
  for (std::size_t j = 0; j < i; ++j) start += segments[j].duration;
  const double w = seg.duration > 1 ? double(t - start) / double(seg.duration - 1) : 1.0;
  return env.interpolate(seg.task, *seg.ramp_to, w);
}

namespace {

struct TaskArg {
  TaskParams task;
  std::string label;
  std::optional<long> duration;
  std::size_t pos;
};

struct Arg {
  std::optional<TaskArg> task;
  std::optional<double> number;
  std::optional<std::pair<std::string, double>> option;  // seed=...
  std::size_t pos;
};

class Parser {
 public:
  Parser(std::string_view s, const Environment& env) : s_(s), env_(env) {}

  std::pair<std::string, std::vector<Arg>> parse() {
    skip_ws();
    const std::string fn = ident();
    expect('(');
    std::vector<Arg> args;
    skip_ws();
    if (peek() != ')') {
      args.push_back(arg(fn));
      while (skip_ws(), peek() == ',') {
        ++i_;
        args.push_back(arg(fn));
      }
    }
    expect(')');
    skip_ws();
    if (i_ != s_.size()) fail("trailing characters");
    return {fn, std::move(args)};
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(i_, what); }

 private:
  char peek() const { return i_ < s_.size() ? s_[i_] : '\0'; }
  void skip_ws() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }
  void expect(char c) {
    skip_ws();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++i_;
  }

  std::string ident() {
    skip_ws();
    const std::size_t b = i_;
    while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_')) ++i_;
    if (b == i_ || std::isdigit(static_cast<unsigned char>(s_[b]))) {
      i_ = b;
      fail("expected identifier");
    }
    return std::string(s_.substr(b, i_ - b));
  }

  bool at_number() const {
    const char c = peek();
    return std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.';
  }

  double number() {
    skip_ws();
    if (peek() == '+') ++i_;  // from_chars rejects a leading '+'
    double v = 0;
    auto [p, ec] = std::from_chars(s_.data() + i_, s_.data() + s_.size(), v);
    if (ec != std::errc()) fail("expected number");
    i_ = static_cast<std::size_t>(p - s_.data());
    return v;
  }

  long duration() {
    const std::size_t at = i_;
    const double d = number();
    if (d < 1 || d != static_cast<double>(static_cast<long>(d))) {
      i_ = at;
      fail("duration must be a positive integer");
    }
    return static_cast<long>(d);
  }

  TaskArg resolve(std::map<std::string, double> kv, std::string label, std::size_t at) {
    try {
      return {env_.task_from_values(kv), std::move(label), std::nullopt, at};
    } catch (const ArgumentError& e) {
      throw ParseError(at, e.what());
    }
  }

  Arg arg(const std::string& fn) {
    skip_ws();
    const std::size_t at = i_;
    Arg a{std::nullopt, std::nullopt, std::nullopt, at};
    if (at_number()) {
      a.number = number();
      return a;
    }
    if (peek() == '{') {
      ++i_;
      std::map<std::string, double> kv;
      std::string label;
      do {
        skip_ws();
        if (peek() == ',') ++i_;
        const std::string k = ident();
        expect('=');
        const double v = number();
        kv[k] = v;
        if (!label.empty()) label += ",";
        label += k + "=" + fmt_number(v);
        skip_ws();
      } while (peek() == ',');
      expect('}');
      a.task = resolve(kv, label, at);
    } else {
      const std::string name = ident();
      skip_ws();
      if (peek() == '=') {
        ++i_;
        const double v = number();
        if (fn == "random" && name == "seed") {
          a.option = std::make_pair(name, v);
          return a;
        }
        a.task = resolve({{name, v}}, name + "=" + fmt_number(v), at);
      } else {
        try {
          a.task = TaskArg{env_.named_task(name), name, std::nullopt, at};
        } catch (const ArgumentError& e) {
          throw ParseError(at, e.what());
        }
      }
    }
    skip_ws();
    if (peek() == ':') {
      ++i_;
      a.task->duration = duration();
    }
    return a;
  }

  static std::string fmt_number(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
  }

  std::string_view s_;
  const Environment& env_;
  std::size_t i_ = 0;
};

Segment make_segment(const TaskArg& t, long duration) { return {duration, t.task, t.label, std::nullopt}; }

}  // namespace

TaskSchedule make_schedule(std::string_view text, const Environment& env, long trial_length) {
  if (trial_length < 0) throw ArgumentError("schedule: negative trial length");
  Parser parser(text, env);
  auto [fn, args] = parser.parse();

  auto need_task = [&](const Arg& a) -> const TaskArg& {
    if (!a.task) throw ParseError(a.pos, "expected a task");
    if (a.task->duration && fn != "sequence") throw ParseError(a.pos, "durations only allowed in sequence()");
    return *a.task;
  };
  auto need_duration = [&](const Arg& a) -> long {
    if (!a.number || *a.number < 1 || *a.number != static_cast<double>(static_cast<long>(*a.number)))
      throw ParseError(a.pos, "expected a positive integer duration");
    return static_cast<long>(*a.number);
  };

  TaskSchedule out;
  auto fill_cyclic = [&](const std::vector<std::pair<TaskArg, long>>& pattern) {
    long t = 0;
    for (std::size_t i = 0; t < trial_length; i = (i + 1) % pattern.size()) {
      const long d = std::min(pattern[i].second, trial_length - t);
      out.segments.push_back(make_segment(pattern[i].first, d));
      t += d;
    }
  };

  if (fn == "constant") {
    if (args.size() != 1) throw ParseError(text.size(), "constant() takes exactly one task");
    const auto& t = need_task(args[0]);
    if (trial_length > 0) out.segments.push_back(make_segment(t, trial_length));
  } else if (fn == "alternate") {
    if (args.size() < 3) throw ParseError(text.size(), "alternate() needs at least two tasks and a duration");
    const long d = need_duration(args.back());
    std::vector<std::pair<TaskArg, long>> pattern;
    for (std::size_t i = 0; i + 1 < args.size(); ++i) pattern.emplace_back(need_task(args[i]), d);
    fill_cyclic(pattern);
  } else if (fn == "sequence") {
    if (args.empty()) throw ParseError(text.size(), "sequence() needs at least one task");
    std::vector<std::pair<TaskArg, long>> pattern;
    for (const auto& a : args) {
      const auto& t = need_task(a);
      if (!t.duration) throw ParseError(a.pos, "sequence() entries need ':duration'");
      pattern.emplace_back(t, *t.duration);
    }
    fill_cyclic(pattern);
  } else if (fn == "random") {
    std::uint64_t seed = 0;
    std::vector<TaskArg> tasks;
    std::optional<long> d;
    for (const auto& a : args) {
      if (a.option) {
        seed = static_cast<std::uint64_t>(a.option->second);
      } else if (a.number) {
        if (d) throw ParseError(a.pos, "random() takes one duration");
        d = need_duration(a);
      } else {
        tasks.push_back(need_task(a));
      }
    }
    if (tasks.empty() || !d) throw ParseError(text.size(), "random() needs tasks and a duration");
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, tasks.size() - 1);
    for (long t = 0; t < trial_length; t += *d)
      out.segments.push_back(make_segment(tasks[pick(rng)], std::min(*d, trial_length - t)));
  } else if (fn == "gradual") {
    if (args.size() != 2) throw ParseError(text.size(), "gradual() takes exactly two tasks");
    const auto& a = need_task(args[0]);
    const auto& b = need_task(args[1]);
    if (trial_length > 0)
      out.segments.push_back({trial_length, a.task, a.label + "->" + b.label, b.task});
  } else {
    throw ParseError(0, "unknown schedule function '" + fn + "'");
  }
  return out;
}

}  // namespace mole
