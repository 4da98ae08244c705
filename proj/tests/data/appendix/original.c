
#include <stdio.h>

int main() {
    int numItems;
    float totalAmount = 0;
    float discountedAmount = 0;

    printf("Enter the number of items in the cart: ");
    scanf("%d", &numItems);

    for (int i = 1; i <= numItems; i++) {
        float price;
        printf("Enter the price of item %d: ", i);
        scanf("%f", &price);

        totalAmount += price;
    }

    if (numItems >= 5) {
        discountedAmount = 0.1 * totalAmount;
        totalAmount -= discountedAmount;
    }

    printf("\nTotal amount: $%.2f\n", totalAmount);
    printf("Discounted amount: $%.2f\n", discountedAmount);

    return 0;
}