#ifndef MINDSKILL_H
#define MINDSKILL_H

/* C interface to the skill-mining engine. All functions returning
 * mindskill_status set a thread-local error message readable through
 * mindskill_last_error() on failure. Strings returned through char** output
 * parameters are owned by the caller and released with
 * mindskill_string_free(). */

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mindskill_status {
    MINDSKILL_OK = 0,
    MINDSKILL_ERR_INVALID_ARGUMENT = 1, /* bad pointer, bad option key/value */
    MINDSKILL_ERR_CONFIG = 2,           /* unusable config or prompt files */
    MINDSKILL_ERR_IO = 3,               /* filesystem trouble */
    MINDSKILL_ERR_FORMAT = 4,           /* document or action text rejected */
    MINDSKILL_ERR_PROVIDER = 5,         /* model backend gave up */
    MINDSKILL_ERR_ENVIRONMENT = 6,      /* environment or checker failure */
    MINDSKILL_ERR_OPTIMIZATION = 7,     /* no usable skill came out of a run */
    MINDSKILL_ERR_UNKNOWN_TARGET = 8,   /* unknown task id or inspect target */
    MINDSKILL_ERR_EMPTY_LIBRARY = 9,    /* eval before mine */
    MINDSKILL_ERR_INTERNAL = 10
} mindskill_status;

typedef struct mindskill_engine mindskill_engine;

/* Library version as "major.minor.patch". Static storage, never freed. */
const char* mindskill_version(void);

/* Message for the most recent failure on the calling thread. Static until the
 * next failing call on the same thread; empty string when nothing failed. */
const char* mindskill_last_error(void);

/* Loads the config file and prepares backends. workdir is where outputs
 * (library, runs, results) land; NULL means the process working directory. */
mindskill_status mindskill_engine_open(const char* config_path, const char* workdir,
                                       mindskill_engine** out);
void mindskill_engine_close(mindskill_engine* engine);

/* Overrides a config value before running a command. Keys: "k", "q",
 * "parallel", "max_steps" (positive integers), "retrieval_mode"
 * ("model" | "lexical"). */
mindskill_status mindskill_engine_set_option(mindskill_engine* engine, const char* key,
                                             const char* value);

/* Commands. task_ids is a comma-separated id list; NULL or "" selects every
 * task in the command's split. *exit_code receives the process-style status
 * (0 = full success) and *output the rendered report. A task that merely
 * fails its checks is reported through exit_code/output, not a status. */
mindskill_status mindskill_engine_mine(mindskill_engine* engine, const char* task_ids,
                                       int* exit_code, char** output);
mindskill_status mindskill_engine_eval(mindskill_engine* engine, const char* task_ids,
                                       int baseline, int* exit_code, char** output);
/* target: "library" | "run:<task_id>" | "skill:<task_id>" */
mindskill_status mindskill_engine_inspect(mindskill_engine* engine, const char* target,
                                          int* exit_code, char** output);
mindskill_status mindskill_engine_demo(mindskill_engine* engine, int* exit_code,
                                       char** output);

/* Parses a SKILL.md document and returns its canonical serialization. */
mindskill_status mindskill_skill_canonicalize(const char* text, char** output);

/* Full format check: *output receives one violation per line, or an empty
 * string when the document is valid. Returns MINDSKILL_OK either way. */
mindskill_status mindskill_skill_violations(const char* text, char** output);

void mindskill_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* MINDSKILL_H */
