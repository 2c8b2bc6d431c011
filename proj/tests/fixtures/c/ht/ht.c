/*
 * Hash table implementation.
 *
 * Layout
 * ------
 * The table is an array of bucket heads. Each bucket is a singly linked
 * chain of ht_entry nodes, newest first. The array length is a power of
 * two so a bucket index is the low bits of the mixed hash.
 *
 * Hashing
 * -------
 * The configured hash function sees the raw key bytes. Its result is
 * passed through hash_mix before use, which lets weak hashes such as
 * djb2 still spread across buckets. The mixed value is cached in the
 * entry, so resizing never rehashes key bytes.
 *
 * Growth
 * ------
 * Before an insert that would push the load factor past
 * HT_MAX_LOAD_NUM / HT_MAX_LOAD_DEN, the bucket array doubles. Entries
 * are relinked into the new array in a single pass. A failed allocation
 * leaves the old array untouched and reports HT_NO_MEMORY.
 *
 * Removal
 * -------
 * Removal unlinks through a pointer-to-link so the head and interior
 * cases share one path. The table never shrinks; ht_clear keeps the
 * capacity as well.
 *
 * Ownership
 * ---------
 * Keys are copied on insert and freed on removal. Values are opaque and
 * are never freed by the table.
 *
 * Debugging
 * ---------
 * With HT_DEBUG defined, every mutation re-counts all chains and aborts
 * when the count disagrees with the stored length.
 */

#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "ht.h"

/* Aborts on internal corruption; only reachable from debug checks. */
static void die(const char *msg)
{
    fprintf(stderr, "ht: fatal: %s\n", msg);
    abort();
}

/*
 * Smallest power of two >= n. Callers guarantee n >= 1 and that the
 * result fits in size_t.
 */
static size_t round_up_pow2(size_t n)
{
    size_t p = 1;

    while (p < n) {
        p <<= 1;
    }
    return p;
}

/*
 * Mixed hash of key under the table's hash function. All lookups and
 * inserts go through here so the cached entry hash always matches.
 */
static uint64_t key_hash(const ht *table, const char *key)
{
    return hash_mix(table->hash(key, strlen(key)));
}

/* Bucket index for a mixed hash. Capacity is a power of two. */
static size_t bucket_of(const ht *table, uint64_t hash)
{
    return (size_t)(hash & (uint64_t)(table->capacity - 1));
}

/*
 * Entry holding key, or NULL. The chain is walked linearly; chains stay
 * short because of the load factor bound.
 */
static ht_entry *find_entry(const ht *table, const char *key, uint64_t hash)
{
    ht_entry *e = table->buckets[bucket_of(table, hash)];

    while (e != NULL) {
        if (entry_matches(e, key, hash)) {
            return e;
        }
        e = e->next;
    }
    return NULL;
}

/*
 * Debug-only consistency check: the sum of chain lengths must equal the
 * stored length. Compiles to nothing useful without HT_DEBUG.
 */
static void check_invariants(const ht *table)
{
#ifdef HT_DEBUG
    size_t i;
    size_t count = 0;

    for (i = 0; i < table->capacity; i++) {
        count += entry_chain_length(table->buckets[i]);
    }
    if (count != table->length) {
        die("length does not match bucket contents");
    }
#else
    (void)table;
#endif
}

/* Rehashes every entry into a table of new_capacity buckets. */
static ht_status resize(ht *table, size_t new_capacity)
{
    ht_entry **buckets;
    size_t i;

    buckets = (ht_entry **)calloc(new_capacity, sizeof(ht_entry *));
    if (buckets == NULL) {
        return HT_NO_MEMORY;
    }
    for (i = 0; i < table->capacity; i++) {
        ht_entry *e = table->buckets[i];
        while (e != NULL) {
            ht_entry *next = e->next;
            size_t b = (size_t)(e->hash & (uint64_t)(new_capacity - 1));
            e->next = buckets[b];
            buckets[b] = e;
            e = next;
        }
    }
    free(table->buckets);
    table->buckets = buckets;
    table->capacity = new_capacity;
    table->resizes++;
    return HT_OK;
}

/*
 * Both allocations are checked; a failure in the second frees the first
 * so no partial table escapes.
 */
ht *ht_create_with(size_t capacity, ht_hash_fn hash)
{
    ht *table = (ht *)malloc(sizeof(ht));

    if (table == NULL) {
        return NULL;
    }
    if (capacity < 1) {
        capacity = 1;
    }
    table->capacity = round_up_pow2(capacity);
    table->length = 0;
    table->resizes = 0;
    table->hash = hash != NULL ? hash : hash_fnv1a;
    table->buckets = (ht_entry **)calloc(table->capacity, sizeof(ht_entry *));
    if (table->buckets == NULL) {
        free(table);
        return NULL;
    }
    return table;
}

ht *ht_create(void)
{
    return ht_create_with(HT_INITIAL_CAPACITY, NULL);
}

/* Clearing first frees every key copy before the bucket array goes. */
void ht_destroy(ht *table)
{
    if (table == NULL) {
        return;
    }
    ht_clear(table);
    free(table->buckets);
    free(table);
}

/* Lookup never allocates and never changes the table. */
void *ht_get(const ht *table, const char *key)
{
    ht_entry *e = find_entry(table, key, key_hash(table, key));

    return e != NULL ? e->value : NULL;
}

/* Shared by ht_set and ht_insert_new; replace selects overwrite behavior. */
static ht_status put(ht *table, const char *key, void *value, bool replace)
{
    uint64_t hash = key_hash(table, key);
    ht_entry *e = find_entry(table, key, hash);
    size_t b;

    if (e != NULL) {
        if (!replace) {
            return HT_EXISTS;
        }
        e->value = value;
        return HT_OK;
    }
    if ((table->length + 1) * HT_MAX_LOAD_DEN > table->capacity * HT_MAX_LOAD_NUM) {
        ht_status st = resize(table, table->capacity * 2);
        if (st != HT_OK) {
            return st;
        }
    }
    e = entry_new(key, value, hash);
    if (e == NULL) {
        return HT_NO_MEMORY;
    }
    b = bucket_of(table, hash);
    e->next = table->buckets[b];
    table->buckets[b] = e;
    table->length++;
    check_invariants(table);
    return HT_OK;
}

ht_status ht_set(ht *table, const char *key, void *value)
{
    return put(table, key, value, true);
}

ht_status ht_insert_new(ht *table, const char *key, void *value)
{
    return put(table, key, value, false);
}

/*
 * link always points at the pointer that refers to the current entry,
 * which is either the bucket head or the previous entry's next field.
 */
ht_status ht_remove(ht *table, const char *key, void **old_value)
{
    uint64_t hash = key_hash(table, key);
    ht_entry **link = &table->buckets[bucket_of(table, hash)];

    while (*link != NULL) {
        ht_entry *e = *link;
        if (entry_matches(e, key, hash)) {
            *link = e->next;
            if (old_value != NULL) {
                *old_value = e->value;
            }
            entry_free(e);
            table->length--;
            check_invariants(table);
            return HT_OK;
        }
        link = &e->next;
    }
    return HT_NOT_FOUND;
}

/* Chains are freed bucket by bucket; the array itself is reused. */
void ht_clear(ht *table)
{
    size_t i;

    for (i = 0; i < table->capacity; i++) {
        entry_free_chain(table->buckets[i]);
        table->buckets[i] = NULL;
    }
    table->length = 0;
}

size_t ht_length(const ht *table)
{
    return table->length;
}

/*
 * Occupancy summary. Also cross-checks the longest chain against the
 * length, which would only fail on a corrupted table.
 */
ht_stats ht_get_stats(const ht *table)
{
    ht_stats s;
    size_t i;

    s.buckets_used = 0;
    s.longest_chain = 0;
    for (i = 0; i < table->capacity; i++) {
        size_t n = entry_chain_length(table->buckets[i]);
        if (n > 0) {
            s.buckets_used++;
        }
        if (n > s.longest_chain) {
            s.longest_chain = n;
        }
    }
    s.load_factor = (double)table->length / (double)table->capacity;
    if (s.longest_chain > table->length) {
        die("chain longer than table");
    }
    return s;
}
