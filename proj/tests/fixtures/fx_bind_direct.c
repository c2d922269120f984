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

/* Plain bind to a filesystem path built with strcpy from a literal. */

struct sockaddr_un {
  unsigned short sun_family;
  char sun_path[108];
};

int socket(int, int, int);
int bind(int, const void*, unsigned);
int listen(int, int);
char* strcpy(char*, const char*);

int main(void) {
  struct sockaddr_un a;
  a.sun_family = 1;
  strcpy(a.sun_path, "/data/misc/fx/ctl.sock");
  int fd = socket(1, 1, 0);
  if (bind(fd, &a, sizeof a) != 0) return 1;
  return listen(fd, 4);
}
