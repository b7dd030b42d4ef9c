#pragma once

#include <initializer_list>
#include <string>

#include "ncflab/config.hpp"

namespace testsupport {

inline ncflab::config::Value num(double v) {
  ncflab::config::Value out;
  out.num = v;
  return out;
}

inline ncflab::config::Value str(std::string s) {
  ncflab::config::Value out;
  out.kind = ncflab::config::Value::Kind::string;
  out.str = std::move(s);
  return out;
}

inline ncflab::config::Value flag(bool b) {
  ncflab::config::Value out;
  out.kind = ncflab::config::Value::Kind::boolean;
  out.flag = b;
  return out;
}

inline ncflab::config::Value nums(std::initializer_list<double> vs) {
  ncflab::config::Value out;
  out.kind = ncflab::config::Value::Kind::list;
  for (double v : vs) out.items.push_back(num(v));
  return out;
}

inline ncflab::config::Value strs(std::initializer_list<const char*> vs) {
  ncflab::config::Value out;
  out.kind = ncflab::config::Value::Kind::list;
  for (const char* v : vs) out.items.push_back(str(v));
  return out;
}

}  // namespace testsupport
