// SPDX-License-Identifier: Apache-2.0
//
// Static library of C function templates. Each risky call has five bug
// patterns; every pattern is rendered in three contexts (buffer size and
// post-processing differ), giving 15 vulnerable variants per call. Variants
// from the first two contexts get a repaired twin that differs only in the
// bug site; the remaining safe slots hold independent safe functions.

#include <cstdio>
#include <string>
#include <vector>

#include "bofnet/corpus.hpp"

namespace bofnet::corpus {

namespace {

struct Pattern {
  InputKind input;
  std::size_t base_size;
  const char* decl;
  const char* bug;
  const char* fix;
  const char* out_bug;
  const char* out_fix;
};

struct Independent {
  InputKind input;
  std::size_t buffer_size;
  const char* core;
};

struct Family {
  RiskyCall call;
  std::vector<Pattern> patterns;
  std::vector<Independent> safe;
};

constexpr auto Arg = InputKind::Argument;
constexpr auto In = InputKind::Stdin;

// clang-format off
const std::vector<Family>& families() {
  static const std::vector<Family> table = {
  {RiskyCall::Strcpy, {
    {Arg, 32, "    char buf[{N}];",
     "    strcpy(buf, s);",
     "    if (strlen(s) >= sizeof(buf)) {\n        return;\n    }\n    strcpy(buf, s);",
     "buf", "buf"},
    {Arg, 24, "    char buf[{N}];",
     "    if (strlen(s) > sizeof(buf) * 4) {\n        return;\n    }\n    strcpy(buf, s);",
     "    if (strlen(s) > sizeof(buf) - 1) {\n        return;\n    }\n    strcpy(buf, s);",
     "buf", "buf"},
    {Arg, 48, "    char buf[{N}];",
     "    if (strlen(s) > sizeof(buf)) {\n        return;\n    }\n    strcpy(buf, s);",
     "    if (strlen(s) >= sizeof(buf)) {\n        return;\n    }\n    strcpy(buf, s);",
     "buf", "buf"},
    {Arg, 16, "    char buf[{N}];",
     "    size_t limit = sizeof(buf) + 32;\n    if (strlen(s) < limit) {\n        strcpy(buf, s);\n    } else {\n        buf[0] = '\\0';\n    }",
     "    size_t limit = sizeof(buf);\n    if (strlen(s) < limit) {\n        strcpy(buf, s);\n    } else {\n        buf[0] = '\\0';\n    }",
     "buf", "buf"},
    {Arg, 32, "    char small[{N}];\n    char big[{N4}];",
     "    if (strlen(s) >= sizeof(big)) {\n        return;\n    }\n    strcpy(small, s);",
     "    if (strlen(s) >= sizeof(big)) {\n        return;\n    }\n    strcpy(big, s);",
     "small", "big"},
  }, {
    {Arg, 0, "    char *copy = malloc(strlen(s) + 1);\n    if (copy == NULL) {\n        return;\n    }\n    strcpy(copy, s);\n    printf(\"%s\\n\", copy);\n    free(copy);"},
    {Arg, 32, "    char greeting[32];\n    strcpy(greeting, \"hello, world\");\n    printf(\"%s %zu\\n\", greeting, strlen(s));"},
    {Arg, 0, "    size_t vowels = 0;\n    size_t n = strlen(s);\n    for (size_t i = 0; i < n; i++) {\n        if (strchr(\"aeiou\", s[i]) != NULL) {\n            vowels++;\n        }\n    }\n    printf(\"%zu/%zu\\n\", vowels, n);"},
    {Arg, 64, "    char buf[64];\n    size_t i = 0;\n    while (s[i] != '\\0' && i < sizeof(buf) - 1) {\n        buf[i] = s[i];\n        i++;\n    }\n    buf[i] = '\\0';\n    puts(buf);"},
    {Arg, 40, "    char buf[40];\n    if (strlen(s) < sizeof(buf)) {\n        strcpy(buf, s);\n    } else {\n        strcpy(buf, \"(truncated)\");\n    }\n    puts(buf);"},
  }},
  {RiskyCall::Strncpy, {
    {Arg, 32, "    char buf[{N}];",
     "    strncpy(buf, s, strlen(s));\n    buf[sizeof(buf) - 1] = '\\0';",
     "    strncpy(buf, s, sizeof(buf) - 1);\n    buf[sizeof(buf) - 1] = '\\0';",
     "buf", "buf"},
    {Arg, 24, "    char buf[{N}];",
     "    strncpy(buf, s, sizeof(buf) * 2);\n    buf[sizeof(buf) - 1] = '\\0';",
     "    strncpy(buf, s, sizeof(buf) - 1);\n    buf[sizeof(buf) - 1] = '\\0';",
     "buf", "buf"},
    {Arg, 48, "    char buf[{N}];",
     "    strncpy(buf, s, sizeof(buf));\n    buf[sizeof(buf)] = '\\0';",
     "    strncpy(buf, s, sizeof(buf));\n    buf[sizeof(buf) - 1] = '\\0';",
     "buf", "buf"},
    {Arg, 16, "    char buf[{N}];",
     "    strncpy(buf, s, sizeof(buf));",
     "    strncpy(buf, s, sizeof(buf) - 1);\n    buf[sizeof(buf) - 1] = '\\0';",
     "buf", "buf"},
    {Arg, 32, "    char buf[{N}];",
     "    buf[0] = '>';\n    buf[1] = ' ';\n    strncpy(buf + 2, s, sizeof(buf) - 1);\n    buf[sizeof(buf) - 1] = '\\0';",
     "    buf[0] = '>';\n    buf[1] = ' ';\n    strncpy(buf + 2, s, sizeof(buf) - 3);\n    buf[sizeof(buf) - 1] = '\\0';",
     "buf", "buf"},
  }, {
    {Arg, 32, "    char buf[32];\n    memset(buf, 0, sizeof(buf));\n    strncpy(buf, s, sizeof(buf) - 1);\n    printf(\"[%s]\\n\", buf);"},
    {Arg, 16, "    char key[16];\n    strncpy(key, \"default-key\", sizeof(key) - 1);\n    key[sizeof(key) - 1] = '\\0';\n    printf(\"%s=%zu\\n\", key, strlen(s));"},
    {Arg, 0, "    int sum = 0;\n    for (const char *p = s; *p != '\\0'; p++) {\n        sum += *p;\n    }\n    printf(\"%d\\n\", sum);"},
    {Arg, 20, "    char head[20];\n    char tail[20];\n    size_t half = strlen(s) / 2;\n    if (half >= sizeof(head)) {\n        half = sizeof(head) - 1;\n    }\n    strncpy(head, s, half);\n    head[half] = '\\0';\n    snprintf(tail, sizeof(tail), \"%s\", s + half);\n    printf(\"%s|%s\\n\", head, tail);"},
    {In, 48, "    char line[48];\n    size_t n = 0;\n    int c;\n    while ((c = getchar()) != EOF && c != '\\n') {\n        if (n < sizeof(line) - 1) {\n            line[n++] = (char)c;\n        }\n    }\n    line[n] = '\\0';\n    puts(line);"},
  }},
  {RiskyCall::Strcat, {
    {Arg, 32, "    char buf[{N}] = \"log: \";",
     "    strcat(buf, s);",
     "    if (strlen(buf) + strlen(s) >= sizeof(buf)) {\n        return;\n    }\n    strcat(buf, s);",
     "buf", "buf"},
    {Arg, 24, "    char buf[{N}] = \"user=\";",
     "    if (strlen(s) > sizeof(buf)) {\n        return;\n    }\n    strcat(buf, s);",
     "    size_t room = sizeof(buf) - strlen(buf) - 1;\n    if (strlen(s) > room) {\n        return;\n    }\n    strcat(buf, s);",
     "buf", "buf"},
    {Arg, 48, "    char buf[{N}];\n    buf[0] = '\\0';",
     "    if (strlen(s) > sizeof(buf)) {\n        return;\n    }\n    strcat(buf, s);",
     "    if (strlen(s) >= sizeof(buf)) {\n        return;\n    }\n    strcat(buf, s);",
     "buf", "buf"},
    {Arg, 16, "    char buf[{N}];\n    buf[0] = '\\0';",
     "    if (strlen(s) > sizeof(buf)) {\n        return;\n    }\n    for (int k = 0; k < 2; k++) {\n        strcat(buf, s);\n    }",
     "    if (2 * strlen(s) >= sizeof(buf)) {\n        return;\n    }\n    for (int k = 0; k < 2; k++) {\n        strcat(buf, s);\n    }",
     "buf", "buf"},
    {Arg, 32, "    char buf[{N}] = \"tag:\";\n    const char *suffix = s;",
     "    if (strlen(buf) >= sizeof(buf) - 1) {\n        return;\n    }\n    strcat(buf, suffix);",
     "    if (strlen(buf) + strlen(suffix) >= sizeof(buf)) {\n        return;\n    }\n    strcat(buf, suffix);",
     "buf", "buf"},
  }, {
    {Arg, 64, "    char path[64];\n    snprintf(path, sizeof(path), \"/tmp/%s\", s);\n    puts(path);"},
    {Arg, 48, "    char msg[48] = \"hi \";\n    strncat(msg, s, sizeof(msg) - strlen(msg) - 1);\n    puts(msg);"},
    {Arg, 0, "    size_t len = strlen(s);\n    char *joined = malloc(len * 2 + 1);\n    if (joined == NULL) {\n        return;\n    }\n    joined[0] = '\\0';\n    strcat(joined, s);\n    strcat(joined, s);\n    puts(joined);\n    free(joined);"},
    {Arg, 0, "    int words = 0;\n    int in_word = 0;\n    for (const char *p = s; *p != '\\0'; p++) {\n        if (isspace((unsigned char)*p)) {\n            in_word = 0;\n        } else if (!in_word) {\n            in_word = 1;\n            words++;\n        }\n    }\n    printf(\"%d\\n\", words);"},
    {Arg, 32, "    char buf[32] = \"\";\n    for (int i = 0; i < 3; i++) {\n        strcat(buf, \"ab\");\n    }\n    printf(\"%s %zu\\n\", buf, strlen(s));"},
  }},
  {RiskyCall::Scanf, {
    {In, 32, "    char buf[{N}];",
     "    if (scanf(\"%s\", buf) != 1) {\n        return;\n    }",
     "    if (scanf(\"%{N1}s\", buf) != 1) {\n        return;\n    }",
     "buf", "buf"},
    {In, 24, "    char buf[{N}];",
     "    if (scanf(\"%{N}s\", buf) != 1) {\n        return;\n    }",
     "    if (scanf(\"%{N1}s\", buf) != 1) {\n        return;\n    }",
     "buf", "buf"},
    {In, 48, "    char first[{N}];\n    char second[{N4}];\n    second[0] = '\\0';",
     "    if (scanf(\"%{N4}s\", first) != 1) {\n        return;\n    }",
     "    if (scanf(\"%{N1}s\", first) != 1) {\n        return;\n    }",
     "first", "first"},
    {In, 16, "    char buf[{N}];",
     "    if (scanf(\"%[^\\n]\", buf) != 1) {\n        return;\n    }",
     "    if (scanf(\"%{N1}[^\\n]\", buf) != 1) {\n        return;\n    }",
     "buf", "buf"},
    {In, 64, "    char buf[{N}];\n    int consumed = 0;",
     "    if (scanf(\"%s%n\", buf, &consumed) != 1) {\n        return;\n    }\n    printf(\"%d\\n\", consumed);",
     "    if (scanf(\"%{N1}s%n\", buf, &consumed) != 1) {\n        return;\n    }\n    printf(\"%d\\n\", consumed);",
     "buf", "buf"},
  }, {
    {In, 0, "    int age = 0;\n    if (scanf(\"%d\", &age) == 1 && age >= 0) {\n        printf(\"%d\\n\", age);\n    }"},
    {In, 8, "    char code[8];\n    if (scanf(\"%7s\", code) == 1) {\n        printf(\"code %s\\n\", code);\n    }"},
    {In, 0, "    double x = 0.0;\n    if (scanf(\"%lf\", &x) == 1) {\n        printf(\"%.2f\\n\", x * 2.0);\n    }"},
    {In, 16, "    char a[16];\n    char b[16];\n    if (scanf(\"%15s %15s\", a, b) == 2) {\n        printf(\"%s-%s\\n\", b, a);\n    }"},
    {Arg, 0, "    size_t n = strlen(s);\n    char *rev = malloc(n + 1);\n    if (rev == NULL) {\n        return;\n    }\n    for (size_t i = 0; i < n; i++) {\n        rev[i] = s[n - 1 - i];\n    }\n    rev[n] = '\\0';\n    puts(rev);\n    free(rev);"},
  }},
  {RiskyCall::Sprintf, {
    {Arg, 32, "    char buf[{N}];",
     "    sprintf(buf, \"%s\", s);",
     "    if (strlen(s) >= sizeof(buf)) {\n        return;\n    }\n    sprintf(buf, \"%s\", s);",
     "buf", "buf"},
    {Arg, 48, "    char buf[{N}];",
     "    sprintf(buf, \"name=%s;\", s);",
     "    sprintf(buf, \"name=%.*s;\", (int)(sizeof(buf) - 7), s);",
     "buf", "buf"},
    {Arg, 24, "    char buf[{N}];",
     "    sprintf(buf, \"%.*s\", (int)sizeof(buf), s);",
     "    sprintf(buf, \"%.*s\", (int)sizeof(buf) - 1, s);",
     "buf", "buf"},
    {Arg, 16, "    char buf[{N}];",
     "    sprintf(buf, \"%d:%s\", (int)strlen(s), s);",
     "    if (strlen(s) + 12 >= sizeof(buf)) {\n        return;\n    }\n    sprintf(buf, \"%d:%s\", (int)strlen(s), s);",
     "buf", "buf"},
    {Arg, 32, "    char buf[{N}];\n    char fmt[16];",
     "    snprintf(fmt, sizeof(fmt), \"%%.%ds\", (int)strlen(s));\n    sprintf(buf, fmt, s);",
     "    snprintf(fmt, sizeof(fmt), \"%%.%ds\", (int)sizeof(buf) - 1);\n    sprintf(buf, fmt, s);",
     "buf", "buf"},
  }, {
    {Arg, 32, "    char buf[32];\n    sprintf(buf, \"%d\", (int)strlen(s));\n    puts(buf);"},
    {Arg, 48, "    char buf[48];\n    snprintf(buf, sizeof(buf), \"<%s>\", s);\n    puts(buf);"},
    {Arg, 3, "    char hex[3];\n    for (size_t i = 0; s[i] != '\\0'; i++) {\n        sprintf(hex, \"%02x\", (unsigned char)s[i]);\n        fputs(hex, stdout);\n    }\n    putchar('\\n');"},
    {In, 24, "    int a = 0;\n    int b = 0;\n    char out[24];\n    if (scanf(\"%d %d\", &a, &b) == 2) {\n        sprintf(out, \"%d\", a + b);\n        puts(out);\n    }"},
    {Arg, 64, "    char buf[64];\n    sprintf(buf, \"%.*s\", (int)sizeof(buf) - 1, s);\n    puts(buf);"},
  }},
  {RiskyCall::Gets, {
    {In, 32, "    char buf[{N}];",
     "    gets(buf);",
     "    if (fgets(buf, sizeof(buf), stdin) == NULL) {\n        return;\n    }\n    buf[strcspn(buf, \"\\n\")] = '\\0';",
     "buf", "buf"},
    {In, 24, "    char buf[{N}];",
     "    gets(buf);\n    if (strlen(buf) >= sizeof(buf)) {\n        puts(\"too long\");\n        return;\n    }",
     "    if (fgets(buf, sizeof(buf), stdin) == NULL) {\n        return;\n    }\n    if (strchr(buf, '\\n') == NULL) {\n        puts(\"too long\");\n        return;\n    }",
     "buf", "buf"},
    {In, 48, "    char line[{N}];\n    char *p;",
     "    p = gets(line);\n    if (p == NULL) {\n        return;\n    }",
     "    p = fgets(line, sizeof(line), stdin);\n    if (p == NULL) {\n        return;\n    }",
     "line", "line"},
    {In, 16, "    char buf[{N}];\n    int seen = 0;\n    buf[0] = '\\0';",
     "    while (gets(buf) != NULL) {\n        if (strcmp(buf, \"end\") == 0) {\n            break;\n        }\n        seen++;\n    }\n    printf(\"%d\\n\", seen);",
     "    while (fgets(buf, sizeof(buf), stdin) != NULL) {\n        if (strcmp(buf, \"end\\n\") == 0) {\n            break;\n        }\n        seen++;\n    }\n    printf(\"%d\\n\", seen);",
     "buf", "buf"},
    {In, 64, "    char buf[{N}];\n    int n = 0;",
     "    if (gets(buf) == NULL) {\n        return;\n    }\n    n = atoi(buf);\n    printf(\"%d\\n\", n);",
     "    if (fgets(buf, sizeof(buf), stdin) == NULL) {\n        return;\n    }\n    n = atoi(buf);\n    printf(\"%d\\n\", n);",
     "buf", "buf"},
  }, {
    {In, 64, "    char buf[64];\n    if (fgets(buf, sizeof(buf), stdin) != NULL) {\n        buf[strcspn(buf, \"\\n\")] = '\\0';\n        puts(buf);\n    }"},
    {In, 0, "    int c;\n    int lines = 0;\n    while ((c = getchar()) != EOF) {\n        if (c == '\\n') {\n            lines++;\n        }\n    }\n    printf(\"%d\\n\", lines);"},
    {In, 0, "    char *line = NULL;\n    size_t cap = 0;\n    ssize_t n = getline(&line, &cap, stdin);\n    if (n > 0) {\n        fputs(line, stdout);\n    }\n    free(line);"},
    {In, 16, "    char buf[16];\n    size_t n = fread(buf, 1, sizeof(buf) - 1, stdin);\n    buf[n] = '\\0';\n    printf(\"%zu %s\\n\", n, buf);"},
    {In, 32, "    char word[32];\n    if (scanf(\"%31s\", word) == 1) {\n        puts(word);\n    }"},
  }},
  {RiskyCall::Fgets, {
    {In, 32, "    char buf[{N}];",
     "    if (fgets(buf, sizeof(buf) * 4, stdin) == NULL) {\n        return;\n    }",
     "    if (fgets(buf, sizeof(buf), stdin) == NULL) {\n        return;\n    }",
     "buf", "buf"},
    {In, 24, "    char buf[{N}];",
     "    if (fgets(buf, 256, stdin) == NULL) {\n        return;\n    }",
     "    if (fgets(buf, sizeof(buf), stdin) == NULL) {\n        return;\n    }",
     "buf", "buf"},
    {In, 48, "    char buf[{N}];",
     "    if (fgets(buf, sizeof(buf) + 1, stdin) == NULL) {\n        return;\n    }",
     "    if (fgets(buf, sizeof(buf), stdin) == NULL) {\n        return;\n    }",
     "buf", "buf"},
    {In, 16, "    char name[{N}];\n    char line[{N4}];\n    line[0] = '\\0';",
     "    if (fgets(name, sizeof(line), stdin) == NULL) {\n        return;\n    }",
     "    if (fgets(name, sizeof(name), stdin) == NULL) {\n        return;\n    }",
     "name", "name"},
    {In, 32, "    char buf[{N}];\n    int len = getchar();",
     "    if (len == EOF) {\n        return;\n    }\n    if (fgets(buf, len, stdin) == NULL) {\n        return;\n    }",
     "    if (len == EOF || len > (int)sizeof(buf)) {\n        len = sizeof(buf);\n    }\n    if (fgets(buf, len, stdin) == NULL) {\n        return;\n    }",
     "buf", "buf"},
  }, {
    {In, 128, "    char buf[128];\n    while (fgets(buf, sizeof(buf), stdin) != NULL) {\n        fputs(buf, stdout);\n    }"},
    {In, 32, "    char name[32];\n    if (fgets(name, sizeof name, stdin) == NULL) {\n        return;\n    }\n    size_t n = strlen(name);\n    if (n > 0 && name[n - 1] == '\\n') {\n        name[n - 1] = '\\0';\n    }\n    printf(\"hello %s\\n\", name);"},
    {In, 64, "    char *buf = malloc(64);\n    if (buf == NULL) {\n        return;\n    }\n    if (fgets(buf, 64, stdin) != NULL) {\n        puts(buf);\n    }\n    free(buf);"},
    {In, 24, "    long total = 0;\n    char num[24];\n    while (fgets(num, sizeof(num), stdin) != NULL) {\n        total += strtol(num, NULL, 10);\n    }\n    printf(\"%ld\\n\", total);"},
    {Arg, 0, "    unsigned h = 5381;\n    for (const char *p = s; *p != '\\0'; p++) {\n        h = h * 33 + (unsigned char)*p;\n    }\n    printf(\"%u\\n\", h);"},
  }},
  {RiskyCall::Memcpy, {
    {Arg, 256, "    char dest[{N}];",
     "    memcpy(dest,s,strlen(s));\n    dest[sizeof(dest) - 1] = '\\0';",
     "    memcpy(dest,s,sizeof(dest));\n    dest[sizeof(dest) - 1] = '\\0';",
     "dest", "dest"},
    {Arg, 32, "    char buf[{N}];",
     "    memcpy(buf, s, strlen(s) + 1);",
     "    size_t n = strlen(s) + 1;\n    if (n > sizeof(buf)) {\n        n = sizeof(buf);\n    }\n    memcpy(buf, s, n);\n    buf[sizeof(buf) - 1] = '\\0';",
     "buf", "buf"},
    {Arg, 48, "    char buf[{N}];\n    size_t n = strlen(s);",
     "    if (n > sizeof(buf)) {\n        return;\n    }\n    memcpy(buf, s, n);\n    buf[n] = '\\0';",
     "    if (n >= sizeof(buf)) {\n        return;\n    }\n    memcpy(buf, s, n);\n    buf[n] = '\\0';",
     "buf", "buf"},
    {Arg, 16, "    char buf[{N}];\n    size_t n = (unsigned char)s[0];",
     "    memcpy(buf, s, n);\n    buf[sizeof(buf) - 1] = '\\0';",
     "    if (n > strlen(s)) {\n        n = strlen(s);\n    }\n    if (n > sizeof(buf) - 1) {\n        n = sizeof(buf) - 1;\n    }\n    memcpy(buf, s, n);\n    buf[n] = '\\0';",
     "buf", "buf"},
    {Arg, 32, "    char small[{N}];\n    char big[{N4}];\n    size_t n = strlen(s);\n    big[0] = '\\0';",
     "    if (n >= sizeof(big)) {\n        n = sizeof(big) - 1;\n    }\n    memcpy(small, s, n);\n    small[n] = '\\0';",
     "    if (n >= sizeof(small)) {\n        n = sizeof(small) - 1;\n    }\n    memcpy(small, s, n);\n    small[n] = '\\0';",
     "small", "small"},
  }, {
    {Arg, 32, "    char buf[32];\n    size_t n = strlen(s);\n    if (n >= sizeof(buf)) {\n        n = sizeof(buf) - 1;\n    }\n    memcpy(buf, s, n);\n    buf[n] = '\\0';\n    puts(buf);"},
    {Arg, 0, "    int values[8];\n    int copy[8];\n    for (int i = 0; i < 8; i++) {\n        values[i] = i * i + (int)strlen(s);\n    }\n    memcpy(copy, values, sizeof(copy));\n    printf(\"%d\\n\", copy[7]);"},
    {Arg, 0, "    size_t n = strlen(s) + 1;\n    char *dup = malloc(n);\n    if (dup == NULL) {\n        return;\n    }\n    memcpy(dup, s, n);\n    puts(dup);\n    free(dup);"},
    {Arg, 0, "    struct point {\n        int x;\n        int y;\n    } a = {3, (int)strlen(s)}, b;\n    memcpy(&b, &a, sizeof(b));\n    printf(\"%d %d\\n\", b.x, b.y);"},
    {Arg, 24, "    char buf[24];\n    memset(buf, '-', sizeof(buf) - 1);\n    buf[sizeof(buf) - 1] = '\\0';\n    printf(\"%s %zu\\n\", buf, strlen(s));"},
  }},
  };
  return table;
}
// clang-format on

// Context c (0, 1, 2) scales the pattern's buffer and picks the
// post-processing applied to the result buffer.
std::size_t context_size(std::size_t base, int context) {
  switch (context) {
    case 0: return base;
    case 1: return base * 2;
    default: return base / 2;
  }
}

std::string context_post(int context) {
  switch (context) {
    case 0:
      return "    printf(\"%s\\n\", {OUT});";
    case 1:
      return "    size_t count = 0;\n"
             "    for (size_t i = 0; {OUT}[i] != '\\0'; i++) {\n"
             "        if ({OUT}[i] == 'a') {\n"
             "            count++;\n"
             "        }\n"
             "    }\n"
             "    printf(\"%zu\\n\", count);";
    default:
      return "    for (size_t i = 0; {OUT}[i] != '\\0'; i++) {\n"
             "        {OUT}[i] = (char)toupper((unsigned char){OUT}[i]);\n"
             "    }\n"
             "    puts({OUT});";
  }
}

void replace_all(std::string& text, std::string_view key, const std::string& value) {
  for (auto pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + value.size())) {
    text.replace(pos, key.size(), value);
  }
}

std::string signature(InputKind input) {
  return input == InputKind::Argument ? "void @NAME@(const char *s)\n{\n" : "void @NAME@(void)\n{\n";
}

std::string render_pattern(const Pattern& p, int context, bool vulnerable) {
  std::size_t n = context_size(p.base_size, context);
  std::string body = signature(p.input);
  body += p.decl;
  body += '\n';
  body += vulnerable ? p.bug : p.fix;
  body += '\n';
  body += context_post(context);
  body += "\n}\n";
  replace_all(body, "{OUT}", vulnerable ? p.out_bug : p.out_fix);
  replace_all(body, "{N1}", std::to_string(n - 1));
  replace_all(body, "{N4}", std::to_string(n * 4));
  replace_all(body, "{N}", std::to_string(n));
  return body;
}

std::string template_id(RiskyCall call, int variant, Safety safety) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s-v%02d-%s", std::string(to_string(call)).c_str(), variant,
                safety == Safety::Vulnerable ? "vuln" : "safe");
  return buf;
}

// Names are a fixed permutation of the template index, so a vulnerable
// template and its twin get unrelated names.
std::string neutral_name(std::size_t index, std::size_t total) {
  std::size_t scrambled = (index * 149 + 71) % total;
  static constexpr char kLetters[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZ";
  std::string name = "proc";
  name += kLetters[scrambled % 26];
  name += kLetters[(scrambled / 26) % 26];
  name += std::to_string(scrambled);
  return name;
}

}  // namespace

FunctionLibrary build_function_library() {
  std::vector<FunctionTemplate> out;
  for (const auto& family : families()) {
    std::vector<FunctionTemplate> vulnerable;
    std::vector<FunctionTemplate> safe;
    for (int context = 0; context < 3; ++context) {
      for (std::size_t pi = 0; pi < family.patterns.size(); ++pi) {
        const auto& p = family.patterns[pi];
        int variant = context * static_cast<int>(family.patterns.size()) + static_cast<int>(pi) + 1;
        FunctionTemplate v;
        v.id = template_id(family.call, variant, Safety::Vulnerable);
        v.call = family.call;
        v.variant_index = variant;
        v.safety = Safety::Vulnerable;
        v.body = render_pattern(p, context, true);
        v.input = p.input;
        v.buffer_size = context_size(p.base_size, context);
        if (variant <= kRepairedVariants) {
          FunctionTemplate s = v;
          s.id = template_id(family.call, variant, Safety::Safe);
          s.safety = Safety::Safe;
          s.body = render_pattern(p, context, false);
          s.repaired_of = v.id;
          safe.push_back(std::move(s));
        }
        vulnerable.push_back(std::move(v));
      }
    }
    int variant = kRepairedVariants;
    for (const auto& ind : family.safe) {
      FunctionTemplate s;
      s.id = template_id(family.call, ++variant, Safety::Safe);
      s.call = family.call;
      s.variant_index = variant;
      s.safety = Safety::Safe;
      s.body = signature(ind.input) + ind.core + "\n}\n";
      s.input = ind.input;
      s.buffer_size = ind.buffer_size == 0 ? 32 : ind.buffer_size;
      safe.push_back(std::move(s));
    }
    for (auto& t : vulnerable) out.push_back(std::move(t));
    for (auto& t : safe) out.push_back(std::move(t));
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i].name = neutral_name(i, out.size());
  return FunctionLibrary(std::move(out));
}

std::string_view program_prelude() {
  return "#include <ctype.h>\n"
         "#include <stdio.h>\n"
         "#include <stdlib.h>\n"
         "#include <string.h>\n"
         "#include <sys/types.h>\n"
         "\n"
         "char *gets(char *s);\n";
}

}  // namespace bofnet::corpus
