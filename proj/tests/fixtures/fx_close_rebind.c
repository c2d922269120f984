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

/* Bind and close both live in the body of a retry loop. */

struct sockaddr_un {
  unsigned short sun_family;
  char sun_path[108];
};

int socket(int, int, int);
int bind(int, const void*, unsigned);
int listen(int, int);
int close(int);
char* strcpy(char*, const char*);

int main(void) {
  struct sockaddr_un a;
  a.sun_family = 1;
  a.sun_path[0] = '\0';
  strcpy(a.sun_path + 1, "fx.rebind");
  int ok = 0;
  for (int i = 0; i < 5; i++) {
    int fd = socket(1, 1, 0);
    if (bind(fd, &a, sizeof a) == 0) {
      listen(fd, 4);
      ok = 1;
    }
    close(fd);
  }
  return ok ? 0 : 1;
}
