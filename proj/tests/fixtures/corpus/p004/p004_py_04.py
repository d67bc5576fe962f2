from functools import lru_cache


@lru_cache(maxsize=None)
def fib(size):
    if size < 2:
        return size
    return fib(size - 1) + fib(size - 2)


print(fib(int(input())))
