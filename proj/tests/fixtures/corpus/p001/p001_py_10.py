def total(arr):
    acc = 0
    for v in arr:
        acc += v
    return acc


if __name__ == "__main__":
    length = int(input())
    arr = [int(v) for v in input().split()]
    print(total(arr))
