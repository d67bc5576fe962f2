def say(t):
    if t % 15 == 0:
        return "FizzBuzz"
    if t % 3 == 0:
        return "Fizz"
    if t % 5 == 0:
        return "Buzz"
    return str(t)


m = int(input())
print("\n".join(say(t) for t in range(1, m + 1)))
