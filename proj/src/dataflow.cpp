/**
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *  http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "udsaudit/dataflow.h"

#include <algorithm>

namespace udsaudit {

RwTable RwTable::defaults() {
  RwTable t;
  t.write_like = {"write", "append", "connectto", "sendto", "create", "setattr", "bind"};
  t.read_like = {"read", "getattr", "recvfrom", "accept", "listen", "getopt"};
  return t;
}

ObjCategory DataflowGraph::categorize(const std::string& cls) {
  if (cls == "sock_file") return ObjCategory::file;
  if (cls.find("socket") != std::string::npos) return ObjCategory::ipc_socket;
  if (cls == "file" || cls == "dir" || cls == "lnk_file" || cls == "chr_file" ||
      cls == "blk_file" || cls == "fifo_file") {
    return ObjCategory::file;
  }
  return ObjCategory::ipc_other;
}

namespace {

// Expands an identifier that may be an attribute into its member types.
// A plain type expands to itself. An attribute with no members expands to
// nothing: no concrete domain matches the rule.
std::vector<std::string> expand(const PolicyDb& db, const std::string& name) {
  auto it = db.attributes.find(name);
  if (it == db.attributes.end()) return {name};
  return {it->second.begin(), it->second.end()};
}

}  // namespace

DataflowGraph DataflowGraph::build(const PolicyDb& db, const RwTable& table) {
  DataflowGraph g;
  for (const AvRule& rule : db.av_rules) {
    std::set<std::string> wr, rd;
    for (const std::string& p : rule.perms) {
      if (table.write_like.count(p)) wr.insert(p);
      if (table.read_like.count(p)) rd.insert(p);
    }
    if (wr.empty() && rd.empty()) continue;

    for (const std::string& src : expand(db, rule.source)) {
      // `self` names the source domain itself, after expansion.
      std::vector<std::string> targets;
      if (rule.target == "self") {
        targets = {src};
      } else {
        targets = expand(db, rule.target);
      }
      for (const std::string& tgt : targets) {
        ObjRef obj{tgt, rule.cls};
        if (!wr.empty()) {
          g.writes_.push_back({src, obj, wr});
          g.writes_by_domain_[src].insert(obj);
          auto& perms = g.write_perms_[obj][src];
          perms.insert(wr.begin(), wr.end());
        }
        if (!rd.empty()) {
          g.reads_.push_back({src, obj, rd});
          g.readers_by_obj_[obj].insert(src);
        }
      }
    }
  }
  return g;
}

std::set<std::string> DataflowGraph::owners(const ObjRef& obj) const {
  std::set<std::string> result;
  auto it = write_perms_.find(obj);
  std::map<std::string, std::set<std::string>> listeners;
  if (it != write_perms_.end()) {
    for (const auto& [domain, perms] : it->second) {
      if (perms.count("bind")) result.insert(domain);
    }
  }
  // listen + accept are read-like; a domain holding both also serves the
  // endpoint even without bind (e.g. it inherited the bound descriptor).
  std::map<std::string, std::set<std::string>> rd_perms;
  for (const FlowEdge& e : reads_) {
    if (e.obj == obj) rd_perms[e.domain].insert(e.perms.begin(), e.perms.end());
  }
  for (const auto& [domain, perms] : rd_perms) {
    if (perms.count("listen") && perms.count("accept")) result.insert(domain);
  }
  return result;
}

bool DataflowGraph::can_write(const std::string& domain, const ObjRef& obj) const {
  auto it = writes_by_domain_.find(domain);
  return it != writes_by_domain_.end() && it->second.count(obj) > 0;
}

bool DataflowGraph::can_read(const std::string& domain, const ObjRef& obj) const {
  auto it = readers_by_obj_.find(obj);
  return it != readers_by_obj_.end() && it->second.count(domain) > 0;
}

std::set<std::string> DataflowGraph::readers(const ObjRef& obj) const {
  auto it = readers_by_obj_.find(obj);
  if (it == readers_by_obj_.end()) return {};
  return it->second;
}

std::set<ObjRef> DataflowGraph::query_writable(const std::string& domain, int hops) const {
  std::set<ObjRef> result;
  std::set<std::string> frontier{domain};
  std::set<std::string> visited_domains{domain};
  std::set<ObjRef> visited_objs;

  for (int step = 0; step < hops; step++) {
    std::set<ObjRef> wrote;
    for (const std::string& d : frontier) {
      auto it = writes_by_domain_.find(d);
      if (it == writes_by_domain_.end()) continue;
      for (const ObjRef& obj : it->second) {
        if (categorize(obj.cls) == ObjCategory::ipc_socket) result.insert(obj);
        wrote.insert(obj);
      }
    }
    if (step + 1 >= hops) break;
    // Data written into an object can be picked up by its readers; their
    // own writes become the next hop.
    std::set<std::string> next;
    for (const ObjRef& obj : wrote) {
      if (visited_objs.count(obj)) continue;
      visited_objs.insert(obj);
      auto it = readers_by_obj_.find(obj);
      if (it == readers_by_obj_.end()) continue;
      for (const std::string& r : it->second) {
        if (visited_domains.insert(r).second) next.insert(r);
      }
    }
    if (next.empty()) break;
    frontier = std::move(next);
  }
  return result;
}

std::set<ObjRef> DataflowGraph::query_writable_served(const std::string& domain, int hops) const {
  std::set<ObjRef> all = query_writable(domain, hops);
  std::set<ObjRef> served;
  for (const ObjRef& obj : all) {
    if (!owners(obj).empty()) served.insert(obj);
  }
  return served;
}

}  // namespace udsaudit
