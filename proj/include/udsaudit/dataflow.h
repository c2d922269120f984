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
#ifndef UDSAUDIT_DATAFLOW_H
#define UDSAUDIT_DATAFLOW_H

#include <map>
#include <set>
#include <string>
#include <vector>

#include "udsaudit/sepolicy.h"

namespace udsaudit {

// How an object type participates in IPC. A class that names a socket
// (unix_stream_socket, netlink_socket, ...) is ipc_socket, except that
// sock_file describes the filesystem node backing a socket and therefore
// behaves like a plain file for access-control purposes.
enum class ObjCategory {
  file,
  ipc_socket,
  ipc_other,
};

// A (type, class) pair naming one object a domain may touch. The class is
// kept because the same type frequently labels both the socket object and
// its filesystem node, and the two carry different access semantics.
struct ObjRef {
  std::string type;
  std::string cls;

  bool operator<(const ObjRef& o) const {
    return type != o.type ? type < o.type : cls < o.cls;
  }
  bool operator==(const ObjRef& o) const { return type == o.type && cls == o.cls; }
};

// Partition of permission names into data-flow directions. Permissions not
// in either set carry no flow (e.g. lock, ioctl_restricted).
struct RwTable {
  std::set<std::string> write_like;
  std::set<std::string> read_like;

  // The built-in partition covering the socket and file permissions that
  // move or expose data.
  static RwTable defaults();
};

// One directed edge: `domain` can move data to (write) or from (read) the
// object `obj`. `perms` records which permissions produced the edge.
struct FlowEdge {
  std::string domain;
  ObjRef obj;
  std::set<std::string> perms;
};

// Read/write view of a policy: which domains write which objects, which
// read them, and who owns each IPC socket endpoint.
class DataflowGraph {
 public:
  // Expands attributes on both sides of every AV rule, expands `self`,
  // splits permissions into read-like and write-like edges.
  static DataflowGraph build(const PolicyDb& db, const RwTable& table = RwTable::defaults());

  const std::vector<FlowEdge>& writes() const { return writes_; }
  const std::vector<FlowEdge>& reads() const { return reads_; }

  static ObjCategory categorize(const std::string& cls);

  // Domains holding bind, or both listen and accept, on the object: the
  // candidates for the server side of the endpoint.
  std::set<std::string> owners(const ObjRef& obj) const;

  // All objects of ipc_socket category that `domain` can write, reachable
  // within `hops` steps. hops == 1 is the direct-edge query. hops > 1
  // additionally chases data relayed through intermediate objects: an
  // object the domain writes is readable by other domains, whose own
  // writable sockets join the result. Multi-hop results describe possible
  // relays, not confirmed ones.
  std::set<ObjRef> query_writable(const std::string& domain, int hops) const;

  // Restriction of query_writable to objects with at least one owner,
  // i.e. sockets some domain actually serves.
  std::set<ObjRef> query_writable_served(const std::string& domain, int hops) const;

  // Direct check: does `domain` hold a write-like permission on `obj`?
  bool can_write(const std::string& domain, const ObjRef& obj) const;
  // Direct check for read-like permission.
  bool can_read(const std::string& domain, const ObjRef& obj) const;

  // Domains with a read-like edge to the object.
  std::set<std::string> readers(const ObjRef& obj) const;

 private:
  std::vector<FlowEdge> writes_;
  std::vector<FlowEdge> reads_;
  // Indexes over the edge lists, keyed for the hot queries.
  std::map<std::string, std::set<ObjRef>> writes_by_domain_;
  std::map<ObjRef, std::set<std::string>> readers_by_obj_;
  std::map<ObjRef, std::map<std::string, std::set<std::string>>> write_perms_;
};

}  // namespace udsaudit

#endif  // UDSAUDIT_DATAFLOW_H
