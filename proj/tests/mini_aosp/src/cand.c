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

/*
 * CAN bus bridge daemon. Serves an abstract control socket; anyone the
 * kernel lets connect is trusted as-is.
 */

struct sockaddr_un {
  unsigned short sun_family;
  char sun_path[108];
};

int socket(int, int, int);
int bind(int, const void*, unsigned);
int listen(int, int);
int accept(int, void*, unsigned*);
long read(int, void*, unsigned long);
int close(int);
char* strcpy(char*, const char*);

int main(void) {
  struct sockaddr_un a;
  a.sun_family = 1;
  a.sun_path[0] = '\0';
  strcpy(a.sun_path + 1, "cand.socket.ctrl");
  int fd = socket(1, 1, 0);
  if (bind(fd, &a, sizeof a) != 0) return 1;
  listen(fd, 4);
  for (;;) {
    int c = accept(fd, 0, 0);
    if (c < 0) break;
    char buf[64];
    read(c, buf, sizeof buf);
    close(c);
  }
  return 0;
}
